#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace ganaug {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class A, class... Rest>
void format_into(std::ostringstream& os, const A& a, const Rest&... rest) {
    os << a;
    format_into(os, rest...);
}
}  // namespace detail

template <class... Args>
std::string format_msg(const Args&... args) {
    std::ostringstream os;
    detail::format_into(os, args...);
    return os.str();
}

template <class... Args>
void check(bool cond, const Args&... args) {
    if (!cond) throw InvariantError(format_msg(args...));
}

template <class... Args>
void check_arg(bool cond, const Args&... args) {
    if (!cond) throw std::invalid_argument(format_msg(args...));
}

}  // namespace ganaug
