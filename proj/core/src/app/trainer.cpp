#include "ltree/app/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ltree/app/checkpoint.hpp"
#include "ltree/error.hpp"
#include "ltree/nn/optim.hpp"
#include "ltree/parser/tree.hpp"

namespace ltree::app
{

namespace
{

// Substream tags, kept distinct from the (epoch, index) example streams.
constexpr std::uint64_t init_stream = 0x696e6974;
constexpr std::uint64_t shuffle_stream = 0x73687566;

std::string fixed(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

nlohmann::ordered_json to_json(const EvalMetrics& m)
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

// Cycles through the training set in per-pass shuffled order.
class ExampleStream
{
public:
    ExampleStream(std::size_t size, std::uint64_t seed) :
        _order(size),
        _seed(seed)
    {
        reshuffle();
    }

    std::size_t next()
    {
        if (_pos == _order.size())
        {
            ++_pass;
            reshuffle();
        }
        return _order[_pos++];
    }

private:
    void reshuffle()
    {
        std::iota(_order.begin(), _order.end(), std::size_t{0});
        Rng rng = Rng::substream(_seed, shuffle_stream, _pass);
        for (std::size_t i = _order.size(); i > 1; --i)
            std::swap(_order[i - 1], _order[rng.below(i)]);
        _pos = 0;
    }

    std::vector<std::size_t> _order;
    std::uint64_t _seed;
    std::uint64_t _pass = 0;
    std::size_t _pos = 0;
};

}

Prediction predict(
    const TaggerModel<float>& model,
    const EncodedExample& example,
    const StructureOptions& options,
    Rng& rng
)
{
    Tape<float> tape(TapeMode::inference);
    StructureOptions discrete = options;
    discrete.relaxation = ParseMode::discrete;
    const auto out = model.forward(tape, example.tokens, example.heads, discrete, rng);
    return {heads_from_adjacency(out.adjacency.value()), predict_tags(out.logits.value())};
}

EvalMetrics evaluate(const TaggerModel<float>& model, const std::vector<EncodedExample>& data, StructureMode mode)
{
    EvalMetrics m;
    std::size_t tag_hits = 0, head_hits = 0, operators = 0, operator_hits = 0;
    double loss = 0.0;
    const StructureOptions options = StructureOptions::evaluation(mode);
    for (const auto& ex : data)
    {
        Tape<float> tape(TapeMode::inference);
        Rng unused(0);
        const auto out = model.forward(tape, ex.tokens, ex.heads, options, unused);
        loss += nll_loss(out.logits, std::span<const int>(ex.tags)).value().item();
        const auto heads = heads_from_adjacency(out.adjacency.value());
        const auto tags = predict_tags(out.logits.value());
        for (std::size_t w = 0; w < ex.tags.size(); ++w)
        {
            tag_hits += tags[w] == ex.tags[w];
            head_hits += heads[w] == ex.heads[w];
            if (ex.tags[w] != 0)
            {
                ++operators;
                operator_hits += tags[w] == ex.tags[w];
            }
        }
        m.words += ex.tags.size();
        ++m.sentences;
    }
    if (m.words > 0)
    {
        m.tagging_accuracy = static_cast<double>(tag_hits) / static_cast<double>(m.words);
        m.attachment = static_cast<double>(head_hits) / static_cast<double>(m.words);
    }
    if (operators > 0)
        m.operator_accuracy = static_cast<double>(operator_hits) / static_cast<double>(operators);
    if (m.sentences > 0)
        m.loss = loss / static_cast<double>(m.sentences);
    return m;
}

std::string metrics_header()
{
    return "epoch,train_loss,dev_tagging_accuracy,dev_operator_accuracy,dev_attachment,dev_loss,learning_rate,improved,"
           "reloaded";
}

std::string metrics_row(const EpochRecord& r)
{
    return std::to_string(r.epoch) + "," + fixed(r.train_loss) + "," + fixed(r.dev.tagging_accuracy) + ","
        + fixed(r.dev.operator_accuracy) + "," + fixed(r.dev.attachment) + "," + fixed(r.dev.loss) + ","
        + fixed(r.learning_rate, 10) + "," + (r.improved ? "1" : "0") + "," + (r.reloaded ? "1" : "0");
}

Trainer::Trainer(RunConfig config) :
    _config((config.validate(), std::move(config))),
    _model(_config.model_spec(), splitmix64(_config.seed ^ init_stream))
{}

TrainResult Trainer::run(const Progress& progress)
{
    const auto start = std::chrono::steady_clock::now();
    const RunConfig& cfg = _config;
    const DataProfile profile = data_profile(cfg.profile);
    const listops::Vocabulary vocab;
    const listops::LabelSet labels(profile.generator.max_arity);
    const auto train = encode_all(load_split(cfg.data_dir, "train"), vocab, labels);
    const auto dev = encode_all(load_split(cfg.data_dir, "dev"), vocab, labels);
    const auto test = encode_all(load_split(cfg.data_dir, "test"), vocab, labels);
    if (train.empty() || dev.empty())
        throw InvalidArgument("training needs non-empty train and dev splits in " + cfg.data_dir.string());

    std::filesystem::create_directories(cfg.output_dir);
    const std::string config_text = cfg.to_text();
    {
        std::ofstream out(cfg.output_dir / "config.txt", std::ios::binary);
        out << config_text;
    }
    std::ofstream metrics(cfg.output_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    metrics << metrics_header() << '\n' << std::flush;

    ParameterStore<float>& params = _model.parameters();
    nn::AdamState<float> adam(params, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
    nn::LrSchedule schedule(cfg.learning_rate, cfg.lr_patience, cfg.lr_decay);
    nn::GradientBuffer<float> grads(params);
    ExampleStream stream(train.size(), cfg.seed);
    const StructureOptions structure = cfg.training_structure();
    const float example_weight = 1.0f / static_cast<float>(cfg.batch_size * cfg.samples);

    // Best model so far, kept in memory for reloads.
    Checkpoint best = make_checkpoint(params, &adam, config_text, 0.0, 0, cfg.learning_rate);
    bool have_best = false;

    TrainResult result;
    std::uint64_t example_counter = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch)
    {
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t update = 0; update < cfg.updates_per_epoch; ++update)
        {
            grads.zero();
            for (std::size_t b = 0; b < cfg.batch_size; ++b)
            {
                const EncodedExample& ex = train[stream.next()];
                Rng rng = Rng::substream(cfg.seed, epoch, example_counter++);
                for (std::size_t s = 0; s < cfg.samples; ++s)
                {
                    Tape<float> tape(TapeMode::train);
                    const auto out = _model.forward(tape, ex.tokens, ex.heads, structure, rng);
                    const Var<float> loss = nll_loss(out.logits, std::span<const int>(ex.tags));
                    const double value = loss.value().item();
                    if (!std::isfinite(value))
                        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
                    loss_sum += value;
                    ++loss_count;
                    grads.accumulate(tape.backward(loss), example_weight);
                }
            }
            nn::clip_gradient_norm(grads, cfg.clip_norm);
            nn::adam_step(adam, grads, params);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(loss_count);
        record.dev = evaluate(_model, dev, cfg.structure);
        const auto decision = schedule.step(record.dev.tagging_accuracy);
        record.improved = decision.improved;
        if (decision.improved)
        {
            best = make_checkpoint(params, &adam, config_text, record.dev.tagging_accuracy, epoch, adam.config.learning_rate);
            have_best = true;
            save_checkpoint(cfg.output_dir / "best.ckpt", best);
            result.best_epoch = epoch;
            result.best_dev = record.dev;
        }
        if (decision.reload_best && have_best)
        {
            best.restore_parameters(params);
            if (cfg.restore_optimizer)
            {
                adam.first_moment = best.optimizer.first_moment;
                adam.second_moment = best.optimizer.second_moment;
                adam.step = best.optimizer.step;
            }
            record.reloaded = true;
        }
        adam.config.learning_rate = decision.learning_rate;
        record.learning_rate = decision.learning_rate;

        metrics << metrics_row(record) << '\n' << std::flush;
        result.history.push_back(record);
        if (progress)
            progress(record);
    }

    save_checkpoint(
        cfg.output_dir / "last.ckpt",
        make_checkpoint(params, &adam, config_text, schedule.best_score().value_or(0.0), cfg.epochs, adam.config.learning_rate)
    );

    // Report the selected (best dev) model.
    best.restore_parameters(params);
    result.test = evaluate(_model, test, cfg.structure);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::ordered_json summary;
    summary["config"] = cfg.to_map();
    summary["best_epoch"] = result.best_epoch;
    summary["dev"] = to_json(result.best_dev);
    summary["test"] = to_json(result.test);
    summary["train_seconds"] = result.seconds;
    std::ofstream out(cfg.output_dir / "summary.json", std::ios::binary);
    out << summary.dump(2) << '\n';
    return result;
}

LoadedModel load_model(const std::filesystem::path& checkpoint)
{
    const Checkpoint c = load_checkpoint(checkpoint);
    RunConfig config = parse_config(c.config_text);
    TaggerModel<float> model(config.model_spec(), splitmix64(config.seed ^ init_stream));
    c.restore_parameters(model.parameters());
    return {std::move(config), std::move(model), c.best_dev_score, c.epoch};
}

}
