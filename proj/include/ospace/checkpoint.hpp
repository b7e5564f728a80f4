/**
 * @file checkpoint.hpp
 * @brief Model checkpoint container.
 *
 * Layout:
 *
 *     8 bytes   magic "OSPCKPT\0"
 *     u32 LE    format version
 *     u64 LE    header length H
 *     H bytes   JSON header: configs, norm stats, stride, seed, array table
 *     ...       float64 LE arrays in header order, row-major
 *
 * Writing then reading restores every double bit for bit.
 */
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ospace/network.hpp"

namespace ospace {

inline constexpr std::array<char, 8> kCheckpointMagic{'O', 'S', 'P', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
    std::array<unsigned char, sizeof(T)> b{};
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b.data()), b.size());
}

template <typename T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw DataError("checkpoint truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
}

inline void put_doubles(std::ostream& out, const std::vector<double>& v) {
    for (double d : v) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
}

inline std::vector<double> get_doubles(std::istream& in, std::size_t n) {
    std::vector<double> v(n);
    for (double& d : v) d = std::bit_cast<double>(get_le<std::uint64_t>(in));
    return v;
}

inline nlohmann::json layer_shapes(const std::vector<DenseLayer>& layers) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& l : layers) a.push_back({{"in", l.in}, {"out", l.out}});
    return a;
}

}  // namespace detail

inline nlohmann::json model_config_json(const ModelConfig& c) {
    return {{"room", {{"rows", c.room.rows}, {"cols", c.room.cols}, {"cell_m", c.room.cell_m}}},
            {"encoder",
             {{"input_dim", c.encoder.input_dim},
              {"max_people", c.encoder.max_people},
              {"layer_widths", c.encoder.layer_widths}}},
            {"head",
             {{"room_dim", c.head.room_dim},
              {"people_dim", c.head.people_dim},
              {"hidden_widths", c.head.hidden_widths},
              {"output_dim", c.head.output_dim}}},
            {"sigma_m", c.gaussian.sigma_m},
            {"stride_m", c.stride_m}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.room.rows = j.at("room").at("rows").get<int>();
    c.room.cols = j.at("room").at("cols").get<int>();
    c.room.cell_m = j.at("room").at("cell_m").get<double>();
    c.encoder.input_dim = j.at("encoder").at("input_dim").get<std::size_t>();
    c.encoder.max_people = j.at("encoder").at("max_people").get<std::size_t>();
    c.encoder.layer_widths = j.at("encoder").at("layer_widths").get<std::vector<std::size_t>>();
    c.head.room_dim = j.at("head").at("room_dim").get<std::size_t>();
    c.head.people_dim = j.at("head").at("people_dim").get<std::size_t>();
    c.head.hidden_widths = j.at("head").at("hidden_widths").get<std::vector<std::size_t>>();
    c.head.output_dim = j.at("head").at("output_dim").get<std::size_t>();
    c.gaussian.sigma_m = j.at("sigma_m").get<double>();
    c.stride_m = j.at("stride_m").get<double>();
    return c;
}

inline void save_checkpoint(std::ostream& out, const ModelWeights& m) {
    nlohmann::json header{{"format", "ospace-checkpoint"},
                          {"version", kCheckpointVersion},
                          {"config", model_config_json(m.config)},
                          {"seed", m.seed},
                          {"encoder_layers", detail::layer_shapes(m.encoder.layers)},
                          {"head_layers", detail::layer_shapes(m.head)},
                          {"room_count", m.rooms.size()},
                          {"room_dims", nlohmann::json::array()}};
    for (const auto& r : m.rooms) header["room_dims"].push_back(r.dim());
    const std::string h = header.dump();

    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::put_le<std::uint32_t>(out, kCheckpointVersion);
    detail::put_le<std::uint64_t>(out, h.size());
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    // norm stats lead the array section
    detail::put_doubles(out, {m.norm.mean_x, m.norm.mean_y, m.norm.std_x, m.norm.std_y});
    for (const auto& l : m.encoder.layers) {
        detail::put_doubles(out, l.weight);
        detail::put_doubles(out, l.bias);
    }
    for (const auto& l : m.head) {
        detail::put_doubles(out, l.weight);
        detail::put_doubles(out, l.bias);
    }
    for (const auto& r : m.rooms) detail::put_doubles(out, r.values);
    if (!out) throw std::runtime_error("failed writing checkpoint");
}

inline ModelWeights load_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic) throw DataError("not an ospace checkpoint");
    const auto version = detail::get_le<std::uint32_t>(in);
    if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto hlen = detail::get_le<std::uint64_t>(in);
    if (hlen > (1u << 26)) throw DataError("checkpoint header too large");
    std::string h(hlen, '\0');
    if (!in.read(h.data(), static_cast<std::streamsize>(hlen))) throw DataError("checkpoint truncated");

    ModelWeights m;
    try {
        const auto header = nlohmann::json::parse(h);
        m.config = model_config_from_json(header.at("config"));
        m.config.validate();
        m.seed = header.at("seed").get<std::uint64_t>();
        const auto ns = detail::get_doubles(in, 4);
        m.norm = {ns[0], ns[1], ns[2], ns[3]};
        m.encoder = EncoderWeights::zeros(m.config.encoder);
        m.head = make_head_layers(m.config.head);
        auto read_layers = [&](std::vector<DenseLayer>& layers, const nlohmann::json& shapes) {
            if (shapes.size() != layers.size()) throw DataError("checkpoint layer count mismatch");
            for (std::size_t i = 0; i < layers.size(); ++i) {
                if (shapes[i].at("in").get<std::size_t>() != layers[i].in ||
                    shapes[i].at("out").get<std::size_t>() != layers[i].out)
                    throw DataError("checkpoint layer shape mismatch");
                layers[i].weight = detail::get_doubles(in, layers[i].weight.size());
                layers[i].bias = detail::get_doubles(in, layers[i].bias.size());
            }
        };
        read_layers(m.encoder.layers, header.at("encoder_layers"));
        read_layers(m.head, header.at("head_layers"));
        for (const auto& d : header.at("room_dims")) {
            const auto dim = d.get<std::size_t>();
            if (dim != m.config.head.room_dim) throw DataError("checkpoint room feature has wrong dimension");
            m.rooms.push_back({detail::get_doubles(in, dim)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("checkpoint config: ") + e.what());
    }
    return m;
}

}  // namespace ospace
