#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "ltree/app/checkpoint.hpp"
#include "ltree/app/config.hpp"
#include "ltree/app/dataset.hpp"
#include "ltree/app/diagnostics.hpp"
#include "ltree/app/trainer.hpp"

using namespace ltree;
using namespace ltree::app;
namespace fs = std::filesystem;

namespace
{

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("ltree_app_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig tiny_run(const fs::path& data, const fs::path& out)
{
    RunConfig cfg;
    cfg.profile = "tiny";
    cfg.data_dir = data;
    cfg.output_dir = out;
    cfg.epochs = 3;
    cfg.updates_per_epoch = 2;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-3;
    cfg.lr_patience = 1;
    return cfg;
}

}

TEST_SUITE("app")
{
    TEST_CASE("config parsing, overrides and validation")
    {
        const RunConfig cfg = parse_config(
            "# comment\n"
            "structure = latent-head\n"
            "estimator=zero-noise\n"
            "relaxation=st\n"
            "epochs=7\n"
            "restore_optimizer=yes\n"
            "attention_output_relu=false\n"
            "\n"
        );
        CHECK(cfg.structure == StructureMode::latent_head);
        CHECK(cfg.estimator == Estimator::zero_noise);
        CHECK(cfg.relaxation == ParseMode::straight_through);
        CHECK(cfg.epochs == 7);
        CHECK(cfg.restore_optimizer);
        CHECK_FALSE(cfg.attention_output_relu);
        CHECK_FALSE(cfg.model_spec().attention_output_relu);

        RunConfig copy = cfg;
        apply_overrides(copy, {"seed=9", "learning_rate=0.5"});
        CHECK(copy.seed == 9);
        CHECK(copy.learning_rate == 0.5);

        // to_text round-trips.
        CHECK(parse_config(copy.to_text()).to_text() == copy.to_text());

        CHECK_THROWS_AS(parse_config("nonsense=1"), ConfigError);
        CHECK_THROWS_AS(parse_config("epochs"), ConfigError);
        CHECK_THROWS_AS(parse_config("epochs=many"), ConfigError);
        CHECK_THROWS_AS(parse_config("structure=forest"), ConfigError);
        CHECK_THROWS_AS(parse_config("estimator=exact"), ConfigError);
        CHECK_THROWS_AS(parse_config("distance_bias=maybe"), ConfigError);
        RunConfig bad;
        CHECK_THROWS_AS(apply_overrides(bad, {"seed"}), ConfigError);
        bad.epochs = 0;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        bad = {};
        bad.temperature = 0.0;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        bad = {};
        bad.dropout = 1.0;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/ltree.conf"), ConfigError);
        CHECK_NOTHROW(RunConfig{}.validate());
    }

    TEST_CASE("training and evaluation structures")
    {
        RunConfig cfg;
        cfg.estimator = Estimator::zero_noise;
        cfg.relaxation = ParseMode::straight_through;
        const StructureOptions train = cfg.training_structure();
        CHECK(train.noise == Noise::zero);
        CHECK(train.relaxation == ParseMode::straight_through);
        const StructureOptions eval = cfg.evaluation_structure();
        CHECK(eval.noise == Noise::zero);
        CHECK(eval.relaxation == ParseMode::discrete);
        cfg.estimator = Estimator::monte_carlo;
        CHECK(cfg.training_structure().noise == Noise::gumbel);
    }

    TEST_CASE("profiles")
    {
        CHECK(data_profile("small").train == 10000);
        CHECK(data_profile("small").generator.max_length == 40);
        CHECK(data_profile("default").train == 90000);
        CHECK(data_profile("default").generator.max_length == 60);
        CHECK_THROWS_AS(data_profile("huge"), ConfigError);
    }

    TEST_CASE("dataset generation is deterministic")
    {
        const fs::path a = scratch("data_a"), b = scratch("data_b");
        generate_dataset(data_profile("tiny"), 5, a);
        generate_dataset(data_profile("tiny"), 5, b);
        for (const char* f : {"train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"})
            CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / "train.jsonl") != slurp(a / "dev.jsonl"));

        const Manifest m = read_manifest(a);
        CHECK(m.profile == "tiny");
        CHECK(m.seed == 5);
        CHECK(m.train == 500);
        const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
        CHECK(manifest["format"] == "ltree-listops-v1");
        CHECK(load_split(a, "dev").size() == 100);
        CHECK_THROWS_AS(load_split(a, "validation"), InvalidArgument);
        CHECK_THROWS_AS(read_manifest(scratch("empty")), InvalidArgument);

        const listops::Vocabulary vocab;
        const listops::LabelSet labels;
        const auto encoded = encode_all(load_split(a, "dev"), vocab, labels);
        for (const auto& ex : encoded)
        {
            CHECK(ex.tokens.size() == ex.heads.size() + 1);
            CHECK(ex.tags.size() == ex.heads.size());
            CHECK(ex.tokens[0] == vocab.id("*"));
        }
        fs::remove_all(a);
        fs::remove_all(b);
    }

    TEST_CASE("checkpoint round trip and corruption")
    {
        TaggerModel<float> model(RunConfig{}.model_spec(), 3);
        nn::AdamState<float> adam(model.parameters(), {});
        adam.step = 12;
        adam.first_moment[0].fill(0.25f);
        const Checkpoint ckpt = make_checkpoint(model.parameters(), &adam, RunConfig{}.to_text(), 0.875, 4, 1e-4);
        const auto bytes = serialize(ckpt);
        const Checkpoint back = deserialize(bytes);
        CHECK(back == ckpt);
        CHECK(back.has_optimizer);
        CHECK(back.optimizer.step == 12);
        CHECK(back.best_dev_score == 0.875);

        const fs::path dir = scratch("ckpt");
        save_checkpoint(dir / "m.ckpt", ckpt);
        CHECK(load_checkpoint(dir / "m.ckpt") == ckpt);
        CHECK_FALSE(fs::exists(dir / "m.ckpt.tmp"));

        // Restoring into a freshly initialized model reproduces the values.
        TaggerModel<float> other(RunConfig{}.model_spec(), 99);
        back.restore_parameters(other.parameters());
        for (std::size_t i = 0; i < model.parameters().size(); ++i)
            CHECK(other.parameters()[i].value == model.parameters()[i].value);

        auto corrupt = bytes;
        corrupt[bytes.size() / 2] ^= 0x40;
        CHECK_THROWS_AS(deserialize(corrupt), FormatError);
        auto truncated = bytes;
        truncated.resize(bytes.size() - 9);
        CHECK_THROWS_AS(deserialize(truncated), FormatError);
        auto magic = bytes;
        magic[0] = 'X';
        CHECK_THROWS_AS(deserialize(magic), FormatError);
        auto trailing = bytes;
        trailing.push_back(0);
        CHECK_THROWS_AS(deserialize(trailing), FormatError);
        CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), InvalidArgument);

        const Checkpoint bare = make_checkpoint(model.parameters(), nullptr, "", 0.0, 0, 0.0);
        CHECK_FALSE(deserialize(serialize(bare)).has_optimizer);
        fs::remove_all(dir);
    }

    TEST_CASE("training writes metrics and checkpoints and is reproducible")
    {
        const fs::path data = scratch("train_data");
        generate_dataset(data_profile("tiny"), 1, data);
        const fs::path out_a = scratch("run_a"), out_b = scratch("run_b");

        std::vector<EpochRecord> seen;
        const TrainResult a = Trainer(tiny_run(data, out_a)).run([&](const EpochRecord& r) { seen.push_back(r); });
        const TrainResult b = Trainer(tiny_run(data, out_b)).run();
        CHECK(seen.size() == 3);
        CHECK(a.history.size() == 3);
        CHECK(a.best_dev.tagging_accuracy == b.best_dev.tagging_accuracy);
        CHECK(a.test.tagging_accuracy == b.test.tagging_accuracy);
        CHECK(slurp(out_a / "metrics.csv") == slurp(out_b / "metrics.csv"));
        // The checkpoints differ only in the recorded output directory.
        Checkpoint ckpt_a = load_checkpoint(out_a / "best.ckpt");
        Checkpoint ckpt_b = load_checkpoint(out_b / "best.ckpt");
        CHECK(ckpt_a.config_text != ckpt_b.config_text);
        ckpt_b.config_text = ckpt_a.config_text;
        CHECK(ckpt_a == ckpt_b);

        for (const char* f : {"config.txt", "metrics.csv", "best.ckpt", "last.ckpt", "summary.json"})
            CHECK(fs::exists(out_a / f));
        const std::string metrics = slurp(out_a / "metrics.csv");
        CHECK(metrics.rfind(metrics_header(), 0) == 0);
        const auto summary = nlohmann::json::parse(slurp(out_a / "summary.json"));
        CHECK(summary.contains("dev"));
        CHECK(summary.contains("test"));

        // Reloading the best checkpoint reproduces its dev score.
        const LoadedModel loaded = load_model(out_a / "best.ckpt");
        const listops::Vocabulary vocab;
        const listops::LabelSet labels;
        const auto dev = encode_all(load_split(data, "dev"), vocab, labels);
        const EvalMetrics again = evaluate(loaded.model, dev, loaded.config.structure);
        CHECK(again.tagging_accuracy == loaded.best_dev_score);
        CHECK(again.tagging_accuracy == a.best_dev.tagging_accuracy);
        CHECK(again.words > 0);
        CHECK((again.attachment >= 0.0 && again.attachment <= 1.0));

        fs::remove_all(data);
        fs::remove_all(out_a);
        fs::remove_all(out_b);
    }

    TEST_CASE("evaluation of gold structure reports perfect attachment")
    {
        TaggerModel<float> model(RunConfig{}.model_spec(), 4);
        listops::GeneratorConfig cfg;
        cfg.count = 20;
        const auto data = encode_all(listops::generate(cfg, 3), listops::Vocabulary{}, listops::LabelSet{});
        const EvalMetrics gold = evaluate(model, data, StructureMode::gold);
        CHECK(gold.attachment == 1.0);
        const EvalMetrics chain = evaluate(model, data, StructureMode::left_chain);
        CHECK(chain.attachment < 1.0);
        CHECK(gold.sentences == 20);
    }

    TEST_CASE("diagnostics")
    {
        const GradcheckSuite suite = run_gradcheck_suite(5, 7);
        CHECK(suite.pass);
        CHECK(suite.max_relative_error < 1e-4);
        std::size_t relaxed = 0, discrete = 0;
        for (const auto& c : suite.cases)
        {
            relaxed += c.mode == ParseMode::relaxed;
            discrete += c.mode == ParseMode::discrete;
            if (c.mode == ParseMode::discrete)
                CHECK(c.status == "non-differentiable");
        }
        CHECK(relaxed == 5);
        CHECK(discrete == 5);

        const std::vector<std::size_t> lengths{4, 8};
        const auto rows = bench_parser(lengths, 1, 0.001);
        CHECK(rows.size() == 2);
        CHECK(rows[1].split_points > rows[0].split_points);
        const std::vector<std::size_t> zero{0};
        CHECK_THROWS_AS(bench_parser(zero), InvalidArgument);

        // Exact cubic data has slope 3.
        std::vector<BenchRow> cubic;
        for (std::size_t n : {10u, 20u, 40u})
            cubic.push_back({n, 0, 1e-9 * static_cast<double>(n * n * n)});
        CHECK(loglog_slope(cubic) == doctest::Approx(3.0));
        CHECK_THROWS_AS(loglog_slope(std::span<const BenchRow>(cubic.data(), 1)), InvalidArgument);
    }
}
