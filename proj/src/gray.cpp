#include "rlelab/gray.hpp"

#include <string>

#include "rlelab/error.hpp"

namespace rlelab {

std::uint64_t configuration_count(std::size_t K, std::size_t L, std::uint64_t budget) {
    RLELAB_REQUIRE(K >= 1 && L >= 1, ErrorCode::InvalidArgument, "need K >= 1 and L >= 1");
    std::uint64_t count = 1;
    for (std::size_t l = 0; l < L; ++l) {
        if (count > budget / K)
            throw Error(ErrorCode::BudgetExceeded,
                        std::to_string(K) + "^" + std::to_string(L) +
                            " configurations exceed the enumeration budget of " +
                            std::to_string(budget));
        count *= K;
    }
    return count;
}

GrayWalk::GrayWalk(std::size_t K, std::size_t L) : K_(K), digits_(L, 0), dir_(L, 1) {
    RLELAB_REQUIRE(K >= 1 && L >= 1, ErrorCode::InvalidArgument, "need K >= 1 and L >= 1");
}

std::optional<GrayStep> GrayWalk::next() {
    if (K_ == 1) return std::nullopt;
    for (std::size_t j = 0; j < digits_.size(); ++j) {
        const bool up = dir_[j] > 0;
        if (up ? digits_[j] + 1 < K_ : digits_[j] > 0) {
            digits_[j] = up ? digits_[j] + 1 : digits_[j] - 1;
            return GrayStep{j, digits_[j]};
        }
        dir_[j] = static_cast<signed char>(-dir_[j]);
    }
    return std::nullopt;
}

std::vector<GrayStep> gray_schedule(std::size_t K, std::size_t L, std::uint64_t budget) {
    const auto count = configuration_count(K, L, budget);
    std::vector<GrayStep> steps;
    steps.reserve(count - 1);
    GrayWalk walk(K, L);
    while (auto s = walk.next()) steps.push_back(*s);
    return steps;
}

}  // namespace rlelab
