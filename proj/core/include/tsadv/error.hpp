#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsadv {

/// Error type thrown by every tsadv component. The message always names the
/// failing operation so CLI stages can report "stage: cause" diagnostics.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "{";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) s += ", ";
        s += std::to_string(shape[i]);
    }
    s += "}";
    return s;
}

[[noreturn]] inline void throw_shape_error(const char* op,
                                           const std::vector<std::size_t>& a,
                                           const std::vector<std::size_t>& b) {
    throw Error(std::string(op) + ": shape mismatch " + shape_to_string(a) +
                " vs " + shape_to_string(b));
}

}  // namespace tsadv
