#include "falab/format.hpp"

#include <array>
#include <charconv>

namespace falab {

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    // from_chars rejects a leading '+', accept it here
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace falab
