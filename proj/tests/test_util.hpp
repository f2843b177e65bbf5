#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rlelab/model.hpp"

namespace testutil {

// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool close(double a, double b, double rel, double abs_floor = 0.0) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

inline bool all_close(const std::vector<double>& a, const std::vector<double>& b, double rel,
                      double abs_floor = 0.0) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!close(a[i], b[i], rel, abs_floor)) return false;
    return true;
}

// Hand-built instance with B = 1 unless stated.
inline rlelab::Instance make_instance(std::size_t L, std::size_t B, std::size_t M, std::size_t sub,
                                      std::vector<double> phi, std::vector<double> s,
                                      std::vector<double> z, std::vector<double> zhat,
                                      double s_max) {
    rlelab::Instance inst;
    inst.L = L;
    inst.B = B;
    inst.M = M;
    inst.sub = sub;
    inst.phi = std::move(phi);
    inst.s = std::move(s);
    inst.z = std::move(z);
    inst.zhat = std::move(zhat);
    inst.s_max = s_max;
    inst.section_atoms.assign(L, 0);
    return inst;
}

}  // namespace testutil
