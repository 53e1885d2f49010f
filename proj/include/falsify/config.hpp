#ifndef FALSIFY_CONFIG_HPP
#define FALSIFY_CONFIG_HPP

#include <optional>
#include <string>

#include "falsify/param_space.hpp"
#include "falsify/reward.hpp"
#include "falsify/rss.hpp"
#include "falsify/search.hpp"
#include "falsify/sim.hpp"

namespace falsify {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything one run needs, resolved. Writing this back out as a
// manifest and re-running it reproduces the outputs byte for byte.
struct RunConfig {
    std::string preset = "paper5";  // empty when a custom space is given
    std::optional<SearchSpace> custom_space;
    WorldConfig world;
    RssConfig rss;
    RewardConfig reward;
    SearchConfig search;

    SearchSpace make_space() const;
};

// Parses a JSON config (sections: preset/space, world, rss, reward,
// controller, search). Unknown or ill-typed keys raise ConfigError
// naming the offending key. Missing keys fall back to defaults.
RunConfig load_config_file(const std::string& path);
RunConfig load_config_text(const std::string& text,
                           const std::string& origin = "<config>");

// Serializes the fully-resolved config plus tool version and output
// directory. The result is itself a loadable config.
std::string manifest_json(const RunConfig& cfg, const std::string& out_dir);

}  // namespace falsify

#endif
