#ifndef FALSIFY_CSV_HPP
#define FALSIFY_CSV_HPP

#include <cstdio>
#include <string>

namespace falsify {

// Shortest-but-exact decimal form of a double: 17 significant digits
// round-trip, so CSV replay diffs are byte-stable.
inline std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace falsify

#endif
