#ifndef FALSIFY_PARAM_SPACE_HPP
#define FALSIFY_PARAM_SPACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace falsify {

// How a parameter's value list was produced. Presets ship fixed lists and
// use Explicit; sampled spaces record the distribution they came from.
enum class ValueSource { Explicit, Grid, Uniform, Normal };

struct DistributionSpec {
    ValueSource source = ValueSource::Explicit;
    double lo = 0.0;    // uniform / grid
    double hi = 0.0;    // uniform / grid
    double mean = 0.0;  // normal
    double sd = 0.0;    // normal
};

struct ParameterDef {
    std::string name;
    std::string unit;
    std::vector<double> values;  // ordered; index i always means values[i]
    DistributionSpec source;

    std::size_t cardinality() const { return values.size(); }
};

// One concrete scenario: an index into each parameter's value list plus
// the resolved values those indices denote.
struct ScenarioAction {
    std::vector<int> indices;
    std::vector<double> values;
};

class SearchSpace {
public:
    SearchSpace() = default;
    SearchSpace(std::vector<ParameterDef> params, std::uint64_t seed);

    const std::vector<ParameterDef>& params() const { return params_; }
    const ParameterDef& param(std::size_t i) const { return params_[i]; }
    std::size_t size() const { return params_.size(); }
    std::uint64_t seed() const { return seed_; }

    std::uint64_t cardinality() const;

    // Resolves index combinations to values. Throws std::out_of_range on
    // an index outside its parameter's value list.
    ScenarioAction resolve(const std::vector<int>& indices) const;

    // Lexicographic unranking: flat 0 is all-zero indices, the last
    // parameter varies fastest. flat must be < cardinality().
    ScenarioAction action_at(std::uint64_t flat) const;

    // Inverse of action_at.
    std::uint64_t rank_of(const std::vector<int>& indices) const;

    // Exact-match lookup of one value per parameter (tolerance for text
    // round-trips). Returns nullopt when any value is not in its list.
    std::optional<ScenarioAction> resolve_values(
        const std::vector<double>& values, double tol = 1e-9) const;

    std::optional<std::size_t> index_of(const std::string& name) const;

private:
    std::vector<ParameterDef> params_;
    std::uint64_t seed_ = 0;
};

// Forward iteration over every index combination in lexicographic order.
class Enumerator {
public:
    explicit Enumerator(const SearchSpace& space)
        : space_(&space), remaining_(space.cardinality()) {}

    bool next(ScenarioAction& out);

private:
    const SearchSpace* space_;
    std::vector<int> indices_;
    std::uint64_t remaining_;
    bool started_ = false;
};

// The five-parameter space of the base experiment, value lists verbatim.
SearchSpace build_paper_preset();

// The seven-parameter space of the scalability experiment: the base
// preset plus pedestrian speed-change magnitude and onset timestep.
SearchSpace build_scalability_preset();

// Returns the preset registered under the given name ("paper5"/"paper7"),
// or nullopt for unknown names.
std::optional<SearchSpace> preset_by_name(const std::string& name);

struct SampleSpec {
    std::string name;
    std::string unit;
    DistributionSpec dist;
    std::size_t count = 0;               // for grid / uniform / normal
    std::vector<double> explicit_values; // for ValueSource::Explicit
};

// Builds a space by sampling each parameter from its declared source.
// Grid mode spaces `count` values evenly over [lo, hi] inclusive; uniform
// and normal draw `count` values from a per-parameter substream of
// `seed`. Throws ConfigError on invalid bounds or counts.
SearchSpace sample_space(const std::vector<SampleSpec>& spec,
                         std::uint64_t seed);

}  // namespace falsify

#endif
