#include "falsify/param_space.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "falsify/errors.hpp"
#include "falsify/rng.hpp"

namespace falsify {

SearchSpace::SearchSpace(std::vector<ParameterDef> params, std::uint64_t seed)
    : params_(std::move(params)), seed_(seed) {
    std::set<std::string> names;
    for (const auto& p : params_) {
        if (p.values.empty())
            throw ConfigError("parameter '" + p.name + "' has no values");
        for (double v : p.values)
            if (!std::isfinite(v))
                throw ConfigError("parameter '" + p.name +
                                  "' has a non-finite value");
        if (!names.insert(p.name).second)
            throw ConfigError("duplicate parameter name '" + p.name + "'");
    }
}

std::uint64_t SearchSpace::cardinality() const {
    std::uint64_t n = 1;
    for (const auto& p : params_) n *= p.values.size();
    return n;
}

ScenarioAction SearchSpace::resolve(const std::vector<int>& indices) const {
    if (indices.size() != params_.size())
        throw std::out_of_range("index count does not match parameter count");
    ScenarioAction a;
    a.indices = indices;
    a.values.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& vals = params_[i].values;
        if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= vals.size())
            throw std::out_of_range("index out of range for parameter '" +
                                    params_[i].name + "'");
        a.values.push_back(vals[indices[i]]);
    }
    return a;
}

ScenarioAction SearchSpace::action_at(std::uint64_t flat) const {
    std::vector<int> idx(params_.size());
    for (std::size_t j = params_.size(); j-- > 0;) {
        const std::uint64_t k = params_[j].values.size();
        idx[j] = static_cast<int>(flat % k);
        flat /= k;
    }
    if (flat != 0)
        throw std::out_of_range("flat index exceeds space cardinality");
    return resolve(idx);
}

std::uint64_t SearchSpace::rank_of(const std::vector<int>& indices) const {
    if (indices.size() != params_.size())
        throw std::out_of_range("index count does not match parameter count");
    std::uint64_t flat = 0;
    for (std::size_t j = 0; j < params_.size(); ++j) {
        const auto k = params_[j].values.size();
        if (indices[j] < 0 || static_cast<std::size_t>(indices[j]) >= k)
            throw std::out_of_range("index out of range for parameter '" +
                                    params_[j].name + "'");
        flat = flat * k + static_cast<std::uint64_t>(indices[j]);
    }
    return flat;
}

std::optional<ScenarioAction> SearchSpace::resolve_values(
    const std::vector<double>& values, double tol) const {
    if (values.size() != params_.size()) return std::nullopt;
    std::vector<int> idx(params_.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& vals = params_[i].values;
        int found = -1;
        for (std::size_t j = 0; j < vals.size(); ++j) {
            if (std::fabs(vals[j] - values[i]) <= tol) {
                found = static_cast<int>(j);
                break;
            }
        }
        if (found < 0) return std::nullopt;
        idx[i] = found;
    }
    return resolve(idx);
}

std::optional<std::size_t> SearchSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    return std::nullopt;
}

bool Enumerator::next(ScenarioAction& out) {
    if (remaining_ == 0) return false;
    if (!started_) {
        indices_.assign(space_->size(), 0);
        started_ = true;
    } else {
        for (std::size_t j = space_->size(); j-- > 0;) {
            if (++indices_[j] <
                static_cast<int>(space_->param(j).values.size()))
                break;
            indices_[j] = 0;
        }
    }
    --remaining_;
    out = space_->resolve(indices_);
    return true;
}

namespace {

ParameterDef explicit_param(std::string name, std::string unit,
                            std::vector<double> values) {
    ParameterDef p;
    p.name = std::move(name);
    p.unit = std::move(unit);
    p.values = std::move(values);
    p.source.source = ValueSource::Explicit;
    return p;
}

}  // namespace

SearchSpace build_paper_preset() {
    std::vector<ParameterDef> params;
    params.push_back(explicit_param("ego-long-pos", "m",
                                    {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
    params.push_back(explicit_param(
        "ped-accel", "m/s^2",
        {0.046, 0.051, 0.097, 0.075, 0.099, 0.076, 0.065, 0.007, 0.007,
         0.013}));
    params.push_back(explicit_param(
        "ped-vel", "m/s",
        {1.803, 1.178, 1.139, 1.476, 1.205, 1.725, 1.142, 1.516, 1.201,
         1.614, 1.808, 1.303, 1.565, 1.416, 1.247, 1.355, 1.755, 1.237,
         1.196, 1.303, 1.552, 1.344, 0.937, 1.108, 0.976}));
    params.push_back(explicit_param("ped-long-pos", "m", {3, 3.5, 4, 4.5}));
    params.push_back(
        explicit_param("weather", "index", {4, 1, 7, 8, 6, 5, 8, 12, 9, 2}));
    return SearchSpace(std::move(params), 0);
}

SearchSpace build_scalability_preset() {
    SearchSpace base = build_paper_preset();
    std::vector<ParameterDef> params = base.params();
    params.push_back(explicit_param("ped_speed_change", "m/s",
                                    {0.50, -0.50, 0.75, -0.75}));
    params.push_back(
        explicit_param("ped_timesteps", "timestep", {20, 30, 40, 50, 60}));
    return SearchSpace(std::move(params), 0);
}

std::optional<SearchSpace> preset_by_name(const std::string& name) {
    if (name == "paper5") return build_paper_preset();
    if (name == "paper7") return build_scalability_preset();
    return std::nullopt;
}

SearchSpace sample_space(const std::vector<SampleSpec>& spec,
                         std::uint64_t seed) {
    std::vector<ParameterDef> params;
    params.reserve(spec.size());
    for (const auto& s : spec) {
        ParameterDef p;
        p.name = s.name;
        p.unit = s.unit;
        p.source = s.dist;
        switch (s.dist.source) {
            case ValueSource::Explicit:
                if (s.explicit_values.empty())
                    throw ConfigError("parameter '" + s.name +
                                      "': explicit source needs values");
                p.values = s.explicit_values;
                break;
            case ValueSource::Grid: {
                if (s.count < 1)
                    throw ConfigError("parameter '" + s.name +
                                      "': count must be >= 1");
                if (!(s.dist.lo < s.dist.hi))
                    throw ConfigError("parameter '" + s.name +
                                      "': grid needs lo < hi");
                if (s.count == 1) {
                    p.values = {s.dist.lo};
                } else {
                    const double step =
                        (s.dist.hi - s.dist.lo) / static_cast<double>(s.count - 1);
                    for (std::size_t i = 0; i < s.count; ++i)
                        p.values.push_back(s.dist.lo +
                                           step * static_cast<double>(i));
                }
                break;
            }
            case ValueSource::Uniform: {
                if (s.count < 1)
                    throw ConfigError("parameter '" + s.name +
                                      "': count must be >= 1");
                if (!(s.dist.lo < s.dist.hi))
                    throw ConfigError("parameter '" + s.name +
                                      "': uniform needs lo < hi");
                Rng rng(substream_seed(seed, "space:" + s.name));
                for (std::size_t i = 0; i < s.count; ++i)
                    p.values.push_back(rng.uniform(s.dist.lo, s.dist.hi));
                break;
            }
            case ValueSource::Normal: {
                if (s.count < 1)
                    throw ConfigError("parameter '" + s.name +
                                      "': count must be >= 1");
                if (!(s.dist.sd > 0))
                    throw ConfigError("parameter '" + s.name +
                                      "': normal needs sd > 0");
                Rng rng(substream_seed(seed, "space:" + s.name));
                for (std::size_t i = 0; i < s.count; ++i)
                    p.values.push_back(rng.normal(s.dist.mean, s.dist.sd));
                break;
            }
        }
        params.push_back(std::move(p));
    }
    return SearchSpace(std::move(params), seed);
}

}  // namespace falsify
