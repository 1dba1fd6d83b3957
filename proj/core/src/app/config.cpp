#include "ltree/app/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "ltree/error.hpp"

namespace ltree::app
{

namespace
{

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value)
{
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("invalid value for '" + std::string(key) + "': '" + std::string(value) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw ConfigError("invalid boolean for '" + std::string(key) + "': '" + std::string(value) + "'");
}

std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}

DataProfile data_profile(std::string_view name)
{
    DataProfile p;
    p.name = std::string(name);
    if (name == "small")
    {
        p.train = 10000, p.dev = 1000, p.test = 1000;
        p.generator.max_length = 40;
    }
    else if (name == "default")
    {
        p.train = 90000, p.dev = 1000, p.test = 1000;
        p.generator.max_length = 60;
    }
    else if (name == "tiny")
    {
        p.train = 500, p.dev = 100, p.test = 100;
        p.generator.max_length = 20;
        p.generator.max_depth = 3;
    }
    else
        throw ConfigError("unknown profile '" + std::string(name) + "' (expected small, default or tiny)");
    return p;
}

std::string to_string(Estimator e)
{
    return e == Estimator::monte_carlo ? "mc" : "zero-noise";
}

Estimator estimator_from_string(std::string_view name)
{
    if (name == "mc")
        return Estimator::monte_carlo;
    if (name == "zero-noise" || name == "zero")
        return Estimator::zero_noise;
    throw ConfigError("unknown estimator '" + std::string(name) + "' (expected mc or zero-noise)");
}

ParseMode relaxation_from_string(std::string_view name)
{
    if (name == "forward-relaxed" || name == "relaxed")
        return ParseMode::relaxed;
    if (name == "straight-through" || name == "st")
        return ParseMode::straight_through;
    throw ConfigError("unknown relaxation '" + std::string(name) + "' (expected forward-relaxed or straight-through)");
}

std::string relaxation_name(ParseMode mode)
{
    switch (mode)
    {
        case ParseMode::relaxed: return "forward-relaxed";
        case ParseMode::straight_through: return "straight-through";
        case ParseMode::discrete: return "discrete";
    }
    return "unknown";
}

void RunConfig::apply(std::string_view key, std::string_view value)
{
    using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;
    static const std::map<std::string, Setter, std::less<>> setters = {
        {"profile", [](RunConfig& c, auto, auto v) { c.profile = std::string(v); }},
        {"structure",
         [](RunConfig& c, auto, auto v) {
             try
             {
                 c.structure = structure_mode_from_string(v);
             }
             catch (const InvalidArgument& e)
             {
                 throw ConfigError(e.what());
             }
         }},
        {"estimator", [](RunConfig& c, auto, auto v) { c.estimator = estimator_from_string(v); }},
        {"relaxation", [](RunConfig& c, auto, auto v) { c.relaxation = relaxation_from_string(v); }},
        {"temperature", [](RunConfig& c, auto k, auto v) { c.temperature = parse_number<double>(k, v); }},
        {"seed", [](RunConfig& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"data_seed", [](RunConfig& c, auto k, auto v) { c.data_seed = parse_number<std::uint64_t>(k, v); }},
        {"samples", [](RunConfig& c, auto k, auto v) { c.samples = parse_number<std::size_t>(k, v); }},
        {"learning_rate", [](RunConfig& c, auto k, auto v) { c.learning_rate = parse_number<double>(k, v); }},
        {"beta1", [](RunConfig& c, auto k, auto v) { c.beta1 = parse_number<double>(k, v); }},
        {"beta2", [](RunConfig& c, auto k, auto v) { c.beta2 = parse_number<double>(k, v); }},
        {"epsilon", [](RunConfig& c, auto k, auto v) { c.epsilon = parse_number<double>(k, v); }},
        {"clip_norm", [](RunConfig& c, auto k, auto v) { c.clip_norm = parse_number<double>(k, v); }},
        {"lr_patience", [](RunConfig& c, auto k, auto v) { c.lr_patience = parse_number<std::size_t>(k, v); }},
        {"lr_decay", [](RunConfig& c, auto k, auto v) { c.lr_decay = parse_number<double>(k, v); }},
        {"restore_optimizer", [](RunConfig& c, auto k, auto v) { c.restore_optimizer = parse_bool(k, v); }},
        {"epochs", [](RunConfig& c, auto k, auto v) { c.epochs = parse_number<std::size_t>(k, v); }},
        {"updates_per_epoch", [](RunConfig& c, auto k, auto v) { c.updates_per_epoch = parse_number<std::size_t>(k, v); }},
        {"batch_size", [](RunConfig& c, auto k, auto v) { c.batch_size = parse_number<std::size_t>(k, v); }},
        {"dropout", [](RunConfig& c, auto k, auto v) { c.dropout = parse_number<double>(k, v); }},
        {"gcn_layers", [](RunConfig& c, auto k, auto v) { c.gcn_layers = parse_number<std::size_t>(k, v); }},
        {"distance_bias", [](RunConfig& c, auto k, auto v) { c.distance_bias = parse_bool(k, v); }},
        {"attention_output_relu", [](RunConfig& c, auto k, auto v) { c.attention_output_relu = parse_bool(k, v); }},
        {"data_dir", [](RunConfig& c, auto, auto v) { c.data_dir = std::string(v); }},
        {"output_dir", [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }},
    };
    const auto it = setters.find(key);
    if (it == setters.end())
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    it->second(*this, key, value);
}

void RunConfig::validate() const
{
    data_profile(profile);
    if (epochs < 1)
        throw ConfigError("epochs must be at least 1");
    if (updates_per_epoch < 1)
        throw ConfigError("updates_per_epoch must be at least 1");
    if (batch_size < 1)
        throw ConfigError("batch_size must be at least 1");
    if (samples < 1)
        throw ConfigError("samples must be at least 1");
    if (!(temperature > 0.0))
        throw ConfigError("temperature must be positive");
    if (!(learning_rate >= 0.0))
        throw ConfigError("learning_rate must be non-negative");
    if (!(clip_norm > 0.0))
        throw ConfigError("clip_norm must be positive");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0))
        throw ConfigError("lr_decay must be in (0, 1]");
    if (lr_patience < 1)
        throw ConfigError("lr_patience must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ConfigError("dropout must be in [0, 1)");
    if (gcn_layers < 1)
        throw ConfigError("gcn_layers must be at least 1");
}

StructureOptions RunConfig::training_structure() const
{
    StructureOptions s;
    s.mode = structure;
    s.noise = estimator == Estimator::monte_carlo ? Noise::gumbel : Noise::zero;
    s.relaxation = relaxation;
    s.temperature = temperature;
    return s;
}

TaggerSpec RunConfig::model_spec() const
{
    const DataProfile p = data_profile(profile);
    TaggerSpec spec;
    spec.vocabulary = listops::Vocabulary().size();
    spec.labels = listops::LabelSet(p.generator.max_arity).size();
    spec.gcn_layers = gcn_layers;
    spec.distance_bias = distance_bias;
    spec.attention_output_relu = attention_output_relu;
    spec.dropout = dropout;
    return spec;
}

std::map<std::string, std::string> RunConfig::to_map() const
{
    return {
        {"profile", profile},
        {"structure", to_string(structure)},
        {"estimator", to_string(estimator)},
        {"relaxation", relaxation_name(relaxation)},
        {"temperature", format_double(temperature)},
        {"seed", std::to_string(seed)},
        {"data_seed", std::to_string(data_seed)},
        {"samples", std::to_string(samples)},
        {"learning_rate", format_double(learning_rate)},
        {"beta1", format_double(beta1)},
        {"beta2", format_double(beta2)},
        {"epsilon", format_double(epsilon)},
        {"clip_norm", format_double(clip_norm)},
        {"lr_patience", std::to_string(lr_patience)},
        {"lr_decay", format_double(lr_decay)},
        {"restore_optimizer", restore_optimizer ? "true" : "false"},
        {"epochs", std::to_string(epochs)},
        {"updates_per_epoch", std::to_string(updates_per_epoch)},
        {"batch_size", std::to_string(batch_size)},
        {"dropout", format_double(dropout)},
        {"gcn_layers", std::to_string(gcn_layers)},
        {"distance_bias", distance_bias ? "true" : "false"},
        {"attention_output_relu", attention_output_relu ? "true" : "false"},
        {"data_dir", data_dir.string()},
        {"output_dir", output_dir.string()},
    };
}

std::string RunConfig::to_text() const
{
    std::string out;
    for (const auto& [k, v] : to_map())
        out += k + "=" + v + "\n";
    return out;
}

RunConfig parse_config(std::string_view text, RunConfig base)
{
    std::size_t line_no = 0;
    while (!text.empty())
    {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        base.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides)
{
    for (const auto& o : overrides)
    {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + o + "' is not key=value");
        config.apply(trim(std::string_view(o).substr(0, eq)), trim(std::string_view(o).substr(eq + 1)));
    }
}

}
