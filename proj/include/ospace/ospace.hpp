#pragma once

#include "ospace/core.hpp"
#include "ospace/random.hpp"
#include "ospace/parallel.hpp"
#include "ospace/dataset.hpp"
#include "ospace/groundtruth.hpp"
#include "ospace/dense.hpp"
#include "ospace/set_encoder.hpp"
#include "ospace/room_features.hpp"
#include "ospace/network.hpp"
#include "ospace/checkpoint.hpp"
#include "ospace/postprocess.hpp"
#include "ospace/evaluation.hpp"
#include "ospace/tuning.hpp"
#include "ospace/synthetic.hpp"
#include "ospace/heatmap_io.hpp"
