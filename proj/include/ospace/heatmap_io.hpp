#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ospace/core.hpp"

namespace ospace {

/// ASCII PGM (P2), 255 levels, rows written in row-major order (row 0 first).
inline void write_pgm(std::ostream& out, const OSpaceMap& m) {
    const RoomSpec& s = m.spec();
    out << "P2\n" << s.cols << ' ' << s.rows << "\n255\n";
    for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
            const long level = std::lround(std::clamp(m.at(r, c), 0.0, 1.0) * 255.0);
            out << level << (c + 1 < s.cols ? ' ' : '\n');
        }
    }
}

inline void write_csv(std::ostream& out, const OSpaceMap& m) {
    const RoomSpec& s = m.spec();
    const auto old = out.precision(17);
    for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) out << m.at(r, c) << (c + 1 < s.cols ? ',' : '\n');
    out.precision(old);
}

}  // namespace ospace
