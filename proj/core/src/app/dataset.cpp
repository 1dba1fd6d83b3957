#include "ltree/app/dataset.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "ltree/error.hpp"

namespace ltree::app
{

Manifest generate_dataset(const DataProfile& profile, std::uint64_t seed, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    Manifest m{profile.name, seed, profile.train, profile.dev, profile.test, profile.generator};
    const std::pair<const char*, std::size_t> splits[] = {{"train", m.train}, {"dev", m.dev}, {"test", m.test}};
    for (std::uint64_t stream = 0; stream < 3; ++stream)
    {
        listops::GeneratorConfig cfg = profile.generator;
        cfg.count = splits[stream].second;
        const auto examples = listops::generate(cfg, seed, stream);
        listops::write_dataset(dir / (std::string(splits[stream].first) + ".jsonl"), examples);
    }

    nlohmann::ordered_json j;
    j["format"] = "ltree-listops-v1";
    j["profile"] = m.profile;
    j["seed"] = m.seed;
    j["counts"] = {{"train", m.train}, {"dev", m.dev}, {"test", m.test}};
    j["files"] = {{"train", "train.jsonl"}, {"dev", "dev.jsonl"}, {"test", "test.jsonl"}};
    j["generator"] = {
        {"max_depth", m.generator.max_depth},
        {"min_arity", m.generator.min_arity},
        {"max_arity", m.generator.max_arity},
        {"max_length", m.generator.max_length},
        {"nesting_probability", m.generator.nesting_probability},
    };
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out)
        throw Error("cannot write manifest in " + dir.string());
    return m;
}

Manifest read_manifest(const std::filesystem::path& dir)
{
    std::ifstream in(dir / "manifest.json");
    if (!in)
        throw InvalidArgument("missing manifest.json in " + dir.string());
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
        Manifest m;
        m.profile = j.at("profile").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.train = j.at("counts").at("train").get<std::size_t>();
        m.dev = j.at("counts").at("dev").get<std::size_t>();
        m.test = j.at("counts").at("test").get<std::size_t>();
        const auto& g = j.at("generator");
        m.generator.max_depth = g.at("max_depth").get<std::size_t>();
        m.generator.min_arity = g.at("min_arity").get<std::size_t>();
        m.generator.max_arity = g.at("max_arity").get<std::size_t>();
        m.generator.max_length = g.at("max_length").get<std::size_t>();
        m.generator.nesting_probability = g.at("nesting_probability").get<double>();
        return m;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError("malformed manifest in " + dir.string() + ": " + e.what());
    }
}

EncodedExample encode(const listops::Example& example, const listops::Vocabulary& vocab, const listops::LabelSet& labels)
{
    EncodedExample e;
    e.tokens.reserve(example.tokens.size());
    for (const auto& t : example.tokens)
        e.tokens.push_back(vocab.id(t));
    e.heads = example.heads;
    e.tags.reserve(example.tags.size());
    for (const auto& t : example.tags)
        e.tags.push_back(labels.index(t));
    return e;
}

std::vector<EncodedExample> encode_all(
    const std::vector<listops::Example>& examples,
    const listops::Vocabulary& vocab,
    const listops::LabelSet& labels
)
{
    std::vector<EncodedExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples)
        out.push_back(encode(ex, vocab, labels));
    return out;
}

std::vector<listops::Example> load_split(const std::filesystem::path& dir, const std::string& split)
{
    const auto path = dir / (split + ".jsonl");
    if (!std::filesystem::exists(path))
        throw InvalidArgument("missing dataset file " + path.string());
    return listops::read_dataset(path);
}

}
