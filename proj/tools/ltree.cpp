// ltree: generate ListOps data, train and evaluate latent-tree taggers,
// check gradients, dump parses and benchmark the parser kernel.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
// LTREE_LOG=quiet|info|debug controls diagnostics on stderr (default info).

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ltree/app/checkpoint.hpp"
#include "ltree/app/config.hpp"
#include "ltree/app/dataset.hpp"
#include "ltree/app/diagnostics.hpp"
#include "ltree/app/trainer.hpp"
#include "ltree/error.hpp"
#include "ltree/parser/eisner.hpp"
#include "ltree/parser/tree.hpp"

namespace
{

using namespace ltree;

enum class LogLevel
{
    quiet,
    info,
    debug
};

LogLevel log_level()
{
    const char* env = std::getenv("LTREE_LOG");
    const std::string v = env ? env : "info";
    if (v == "quiet" || v == "0")
        return LogLevel::quiet;
    if (v == "debug" || v == "2")
        return LogLevel::debug;
    return LogLevel::info;
}

void log_info(const std::string& msg)
{
    if (log_level() >= LogLevel::info)
        std::cerr << "[ltree] " << msg << '\n';
}

// Usage errors raised after CLI11 parsing finished.
struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::string percent(double v)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << 100.0 * v;
    return os.str();
}

nlohmann::ordered_json metrics_json(const app::EvalMetrics& m)
{
    return {
        {"tagging_accuracy", m.tagging_accuracy},
        {"operator_accuracy", m.operator_accuracy},
        {"attachment", m.attachment},
        {"loss", m.loss},
        {"sentences", m.sentences},
        {"words", m.words},
    };
}

int cmd_generate(const std::string& profile_name, std::uint64_t seed, const std::string& out)
{
    const app::DataProfile profile = app::data_profile(profile_name);
    const app::Manifest m = app::generate_dataset(profile, seed, out);
    std::cout << "wrote " << out << ": train " << m.train << ", dev " << m.dev << ", test " << m.test << " (profile "
              << m.profile << ", seed " << m.seed << ")\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides)
{
    app::RunConfig config;
    if (!config_path.empty())
        config = app::load_config(config_path);
    app::apply_overrides(config, overrides);
    config.validate();
    log_info("training " + to_string(config.structure) + " (" + app::to_string(config.estimator) + ", "
             + app::relaxation_name(config.relaxation) + ") seed " + std::to_string(config.seed) + " -> "
             + config.output_dir.string());
    app::Trainer trainer(config);
    const auto result = trainer.run([](const app::EpochRecord& r) {
        if (log_level() >= LogLevel::info)
            std::cerr << "[ltree] epoch " << r.epoch << " loss " << r.train_loss << " dev acc "
                      << percent(r.dev.tagging_accuracy) << " att " << percent(r.dev.attachment) << " lr "
                      << r.learning_rate << (r.reloaded ? " (reloaded best)" : "") << '\n';
    });
    std::cout << "best epoch " << result.best_epoch << ": dev tagging " << percent(result.best_dev.tagging_accuracy)
              << "% (operators " << percent(result.best_dev.operator_accuracy) << "%), attachment "
              << percent(result.best_dev.attachment) << "%; test tagging " << percent(result.test.tagging_accuracy)
              << "%, attachment " << percent(result.test.attachment) << "%\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir, const std::string& split, bool json)
{
    const app::LoadedModel loaded = app::load_model(checkpoint);
    const app::DataProfile profile = app::data_profile(loaded.config.profile);
    const auto data = app::encode_all(
        app::load_split(data_dir.empty() ? loaded.config.data_dir : std::filesystem::path(data_dir), split),
        listops::Vocabulary(),
        listops::LabelSet(profile.generator.max_arity)
    );
    const app::EvalMetrics m = app::evaluate(loaded.model, data, loaded.config.structure);
    if (json)
    {
        nlohmann::ordered_json j = metrics_json(m);
        j["split"] = split;
        j["structure"] = to_string(loaded.config.structure);
        j["epoch"] = loaded.epoch;
        std::cout << j.dump(2) << '\n';
    }
    else
        std::cout << split << ": tagging " << percent(m.tagging_accuracy) << "% (operators "
                  << percent(m.operator_accuracy) << "%), attachment " << percent(m.attachment) << "%, loss " << m.loss
                  << " over " << m.sentences << " sentences\n";
    return 0;
}

int cmd_gradcheck(std::size_t cases, std::uint64_t seed, double h, double tol)
{
    const auto suite = app::run_gradcheck_suite(cases, seed, h, tol, true);
    std::cout << "case  n  mode              max_rel_error  status\n";
    for (const auto& c : suite.cases)
    {
        std::ostringstream err;
        if (c.status == "non-differentiable")
            err << "-";
        else
            err << std::scientific << std::setprecision(3) << c.report.max_relative_error;
        std::cout << std::left << std::setw(6) << c.index << std::setw(3) << c.n << std::setw(18)
                  << app::relaxation_name(c.mode) << std::setw(15) << err.str() << c.status << '\n';
    }
    std::cout << (suite.pass ? "PASS" : "FAIL") << ": relaxed composite max relative error " << std::scientific
              << suite.max_relative_error << " (tolerance " << tol << ")\n";
    return suite.pass ? 0 : 1;
}

std::vector<std::vector<std::string>> read_sentences(const std::string& input)
{
    std::ifstream file;
    std::istream* in = &std::cin;
    if (input != "-")
    {
        file.open(input);
        if (!file)
            throw InvalidArgument("cannot open input " + input);
        in = &file;
    }
    std::vector<std::vector<std::string>> out;
    std::string line;
    while (std::getline(*in, line))
    {
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        for (std::string t; ss >> t;)
            tokens.push_back(t);
        if (tokens.empty())
            continue;
        if (tokens.front() != listops::root_token)
            tokens.insert(tokens.begin(), std::string(listops::root_token));
        out.push_back(std::move(tokens));
    }
    return out;
}

int cmd_parse(
    const std::string& checkpoint,
    const std::string& input,
    bool sample,
    std::uint64_t seed,
    bool dump_chart,
    double temperature
)
{
    const app::LoadedModel loaded = app::load_model(checkpoint);
    const listops::Vocabulary vocab;
    const listops::LabelSet labels(app::data_profile(loaded.config.profile).generator.max_arity);
    StructureOptions options = StructureOptions::evaluation(loaded.config.structure);
    if (sample)
        options.noise = Noise::gumbel;

    const auto sentences = read_sentences(input);
    for (std::size_t s = 0; s < sentences.size(); ++s)
    {
        app::EncodedExample ex;
        for (const auto& t : sentences[s])
            ex.tokens.push_back(vocab.id(t));
        // Gold heads (needed only by gold-structure models) when the line is a
        // well-formed expression.
        try
        {
            ex.heads = listops::to_dependencies(sentences[s]).heads;
        }
        catch (const FormatError&)
        {
            if (loaded.config.structure == StructureMode::gold)
                throw InvalidArgument("line " + std::to_string(s + 1) + " is not a well-formed expression");
        }
        Rng rng = Rng::substream(seed, s);
        const auto pred = app::predict(loaded.model, ex, options, rng);
        std::cout << "# sentence " << s << '\n';
        std::cout << "tokens";
        for (const auto& t : sentences[s])
            std::cout << ' ' << t;
        std::cout << "\nheads";
        for (int h : pred.heads)
            std::cout << ' ' << h;
        std::cout << "\ntags";
        for (int t : pred.tags)
            std::cout << ' ' << labels.label(static_cast<std::size_t>(t));
        std::cout << "\ntree " << bracketed(pred.heads, sentences[s]) << '\n';
        if (dump_chart)
        {
            Tape<float> tape(TapeMode::inference);
            Rng unused(0);
            const Tensor<double> scores = loaded.model.arc_scores(tape, ex.tokens, unused).value().cast<double>();
            Chart<double> chart;
            eisner_relaxed_forward(scores, temperature, chart);
            eisner_backtrack(chart);
            std::cout << "chart (i j direction completeness weight contribution)\n";
            chart.dump(std::cout);
        }
    }
    return 0;
}

std::vector<std::size_t> parse_lengths(const std::string& text)
{
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');)
    {
        if (item.empty())
            continue;
        std::size_t pos = 0;
        long long v = 0;
        try
        {
            v = std::stoll(item, &pos);
        }
        catch (const std::exception&)
        {
            throw UsageError("invalid length '" + item + "'");
        }
        if (pos != item.size() || v < 0)
            throw UsageError("invalid length '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty())
        throw UsageError("no lengths given");
    return out;
}

int cmd_bench(const std::string& lengths_text, std::size_t trials, bool arena, std::size_t sentences, std::size_t max_length)
{
    const auto lengths = parse_lengths(lengths_text);
    for (auto n : lengths)
        if (n == 0)
            throw UsageError("sentence length must be at least 1");
    const auto rows = app::bench_parser(lengths, trials);
    std::cout << "n      split_points  seconds\n";
    for (const auto& r : rows)
        std::cout << std::left << std::setw(7) << r.n << std::setw(14) << r.split_points << std::scientific
                  << std::setprecision(4) << r.seconds << std::defaultfloat << '\n';
    if (rows.size() >= 2)
        std::cout << "log-log slope " << std::fixed << std::setprecision(3) << app::loglog_slope(rows)
                  << std::defaultfloat << '\n';
    if (arena)
    {
        const auto c = app::bench_arena(sentences, 2, max_length, trials);
        std::cout << "batch of " << c.sentences << " sentences (mean length " << std::fixed << std::setprecision(1)
                  << c.mean_length << ", max " << c.max_length << "): arena " << std::scientific
                  << std::setprecision(4) << c.arena_seconds << " s, padded " << c.padded_seconds << " s, speedup "
                  << std::fixed << std::setprecision(2) << c.speedup << "x\n";
    }
    return 0;
}

}

int main(int argc, char** argv)
{
    CLI::App cli{"ltree: latent projective dependency trees with perturb-and-parse"};
    cli.require_subcommand(1);

    std::string profile = "small", out_dir = "data/small";
    std::uint64_t seed = 1;
    auto* generate = cli.add_subcommand("generate", "Generate ListOps train/dev/test splits and a manifest");
    generate->add_option("--profile", profile, "small, default or tiny")->capture_default_str();
    generate->add_option("--seed", seed, "Dataset seed")->capture_default_str();
    generate->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string data_dir, run_dir;
    auto* train = cli.add_subcommand("train", "Train a tagger; writes metrics.csv, checkpoints and summary.json");
    train->add_option("--config", config_path, "key=value config file (see configs/)");
    train->add_option("--set", overrides, "Override a config key (key=value), repeatable");
    train->add_option("--data", data_dir, "Dataset directory (overrides data_dir)");
    train->add_option("--out", run_dir, "Run directory (overrides output_dir)");
    train->add_option("--seed", seed, "Training seed (overrides seed)");

    std::string checkpoint, split = "dev";
    bool json = false;
    auto* eval = cli.add_subcommand("eval", "Evaluate a checkpoint with noise-free discrete structures");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval->add_option("--data", data_dir, "Dataset directory (default: the one used for training)");
    eval->add_option("--split", split, "train, dev or test")->capture_default_str();
    eval->add_flag("--json", json, "Print metrics as JSON");

    std::size_t cases = 20;
    double h = 1e-4, tol = 1e-4;
    std::uint64_t gc_seed = 2024;
    auto* gradcheck = cli.add_subcommand("gradcheck", "Finite-difference check of scorer + relaxed parser + GCN");
    gradcheck->add_option("--cases", cases, "Number of random instances")->capture_default_str();
    gradcheck->add_option("--seed", gc_seed, "Seed")->capture_default_str();
    gradcheck->add_option("--step", h, "Central-difference step")->capture_default_str();
    gradcheck->add_option("--tol", tol, "Relative error tolerance")->capture_default_str();

    std::string input = "-";
    bool sample = false, dump_chart = false;
    double temperature = 1.0;
    std::uint64_t parse_seed = 1;
    auto* parse_cmd = cli.add_subcommand("parse", "Print trees (heads, tags, brackets) for whitespace-tokenized lines");
    parse_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    parse_cmd->add_option("--input", input, "Input file, one sentence per line ('-' = stdin)")->capture_default_str();
    parse_cmd->add_flag("--sample", sample, "Perturb scores with Gumbel noise (default: G = 0)");
    parse_cmd->add_option("--seed", parse_seed, "Noise seed for --sample")->capture_default_str();
    parse_cmd->add_flag("--dump-chart", dump_chart, "Also dump the relaxed chart of the unperturbed scores");
    parse_cmd->add_option("--temperature", temperature, "Temperature for --dump-chart")->capture_default_str();

    std::string lengths = "10,20,40,80";
    std::size_t trials = 5, sentences = 64, max_length = 40;
    bool arena = false;
    auto* bench = cli.add_subcommand("bench", "Time the relaxed parser kernel");
    bench->add_option("--lengths", lengths, "Comma-separated sentence lengths")->capture_default_str();
    bench->add_option("--trials", trials, "Timing trials (best is reported)")->capture_default_str();
    bench->add_flag("--arena", arena, "Also compare the length-aware arena with padding");
    bench->add_option("--sentences", sentences, "Batch size for --arena")->capture_default_str();
    bench->add_option("--max-length", max_length, "Longest sentence for --arena")->capture_default_str();

    try
    {
        cli.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (*generate)
            return cmd_generate(profile, seed, out_dir);
        if (*train)
        {
            if (!data_dir.empty())
                overrides.push_back("data_dir=" + data_dir);
            if (!run_dir.empty())
                overrides.push_back("output_dir=" + run_dir);
            if (train->count("--seed") > 0)
                overrides.push_back("seed=" + std::to_string(seed));
            return cmd_train(config_path, overrides);
        }
        if (*eval)
            return cmd_eval(checkpoint, data_dir, split, json);
        if (*gradcheck)
            return cmd_gradcheck(cases, gc_seed, h, tol);
        if (*parse_cmd)
            return cmd_parse(checkpoint, input, sample, parse_seed, dump_chart, temperature);
        if (*bench)
            return cmd_bench(lengths, trials, arena, sentences, max_length);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "ltree: configuration error: " << e.what() << '\n';
        return 2;
    }
    catch (const InvalidArgument& e)
    {
        std::cerr << "ltree: " << e.what() << '\n';
        return 2;
    }
    catch (const UsageError& e)
    {
        std::cerr << "ltree: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "ltree: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
