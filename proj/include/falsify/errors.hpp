#ifndef FALSIFY_ERRORS_HPP
#define FALSIFY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace falsify {

// Invalid configuration input (bad key, bad bounds, unknown preset).
// The message names the offending key or value; the CLI maps this to
// exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace falsify

#endif
