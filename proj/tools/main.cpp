#include "cli.hpp"

int main(int argc, char** argv) { return ospace::cli::run(argc, argv); }
