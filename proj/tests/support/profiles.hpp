#pragma once

// Process-wide cache of built profiles so several test cases can share one
// build.

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "memheat/kernel.hpp"

namespace testing_support {

inline const memheat::ProfileTable& profile(double alpha, memheat::Rational beta, int dim_n = 1) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, std::int64_t, std::int64_t>, std::unique_ptr<memheat::ProfileTable>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[{dim_n, alpha, beta.num, beta.den}];
    if (!slot) {
        slot = std::make_unique<memheat::ProfileTable>(
            memheat::build_profile(memheat::FractionalParams{dim_n, alpha, beta}, {}, 1e-6, 0));
    }
    return *slot;
}

}  // namespace testing_support
