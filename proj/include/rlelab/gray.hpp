#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace rlelab {

inline constexpr std::uint64_t kDefaultEnumerationBudget = std::uint64_t{1} << 26;

// K^L, or throws Error(BudgetExceeded) if it exceeds the budget.
std::uint64_t configuration_count(std::size_t K, std::size_t L,
                                  std::uint64_t budget = kDefaultEnumerationBudget);

struct GrayStep {
    std::size_t section;
    std::size_t atom;

    friend bool operator==(const GrayStep&, const GrayStep&) = default;
};

// Reflected mixed-radix Gray walk over {0..K-1}^L, starting at all zeros.
// Each call to next() moves exactly one digit by +/-1.
class GrayWalk {
public:
    GrayWalk(std::size_t K, std::size_t L);

    const std::vector<std::size_t>& digits() const noexcept { return digits_; }
    std::optional<GrayStep> next();

private:
    std::size_t K_;
    std::vector<std::size_t> digits_;
    std::vector<signed char> dir_;
};

// Materialized transition list; K^L - 1 entries.
std::vector<GrayStep> gray_schedule(std::size_t K, std::size_t L,
                                    std::uint64_t budget = kDefaultEnumerationBudget);

}  // namespace rlelab
