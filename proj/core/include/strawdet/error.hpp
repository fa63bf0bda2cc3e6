#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace strawdet {

// All library failures throw this; the message names the offending
// dimension, slot, or file byte so callers can report it verbatim.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void append_msg(std::ostringstream&) {}
template <typename T, typename... Rest>
void append_msg(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    append_msg(os, rest...);
}
} // namespace detail

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
    std::ostringstream os;
    detail::append_msg(os, args...);
    throw Error(os.str());
}

template <typename... Args>
void require(bool cond, const Args&... args) {
    if (!cond) fail(args...);
}

} // namespace strawdet
