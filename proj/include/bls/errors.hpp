#pragma once

#include <stdexcept>
#include <string>

namespace bls {

// Requested tolerance could not be reached; carries the bound that was achieved.
class accuracy_error : public std::runtime_error {
public:
    accuracy_error(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved bound " + std::to_string(achieved) + ")"),
          achieved_bound(achieved) {}
    double achieved_bound;
};

// Degenerate/null-state dimension hit in a Gram matrix, or a degenerate
// internal dimension in the coefficient solve.
class degeneracy_error : public std::runtime_error {
public:
    degeneracy_error(const std::string& what, int level = -1)
        : std::runtime_error(what), level(level) {}
    int level;
};

// Enclosure test could not classify the point at the available resolution.
class resolution_error : public std::runtime_error {
public:
    resolution_error(const std::string& what, double rate)
        : std::runtime_error(what), indeterminate_rate(rate) {}
    double indeterminate_rate;
};

} // namespace bls
