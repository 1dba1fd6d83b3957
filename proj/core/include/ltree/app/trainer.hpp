#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ltree/app/config.hpp"
#include "ltree/app/dataset.hpp"
#include "ltree/model/tagger.hpp"

namespace ltree::app
{

// Corpus-level (micro-averaged) metrics; the root token is excluded.
struct EvalMetrics
{
    double tagging_accuracy = 0.0;  // all words
    double operator_accuracy = 0.0; // words whose gold tag is not NONE
    double attachment = 0.0;        // predicted head == gold head
    double loss = 0.0;              // mean per-sentence cross-entropy
    std::size_t sentences = 0;
    std::size_t words = 0;
};

struct Prediction
{
    std::vector<int> heads;
    std::vector<int> tags;
};

// Runs the model on one sentence with the given structure options on an
// inference tape. `rng` feeds the noise when options.noise is gumbel.
Prediction predict(
    const TaggerModel<float>& model,
    const EncodedExample& example,
    const StructureOptions& options,
    Rng& rng
);

// Discrete, noise-free evaluation (the mode-appropriate MAP structure).
EvalMetrics evaluate(const TaggerModel<float>& model, const std::vector<EncodedExample>& data, StructureMode mode);

struct EpochRecord
{
    std::size_t epoch = 0;
    double train_loss = 0.0;
    EvalMetrics dev;
    double learning_rate = 0.0;
    bool improved = false;
    bool reloaded = false;
};

struct TrainResult
{
    std::size_t best_epoch = 0;
    EvalMetrics best_dev;
    EvalMetrics test;
    std::vector<EpochRecord> history;
    double seconds = 0.0;
};

// Header and row format of metrics.csv.
std::string metrics_header();
std::string metrics_row(const EpochRecord& record);

// Single-sample Monte Carlo training of the tagger (or its G = 0 variant):
// `updates_per_epoch` Adam updates per epoch, each on a batch accumulated
// from `batch_size` single-example tapes, global-norm clipping, dev
// evaluation after every epoch, and decay-with-reload on a stalled dev
// tagging accuracy.
//
// Writes into config.output_dir: config.txt, metrics.csv (one row per
// epoch, flushed as it goes), best.ckpt, last.ckpt and summary.json.
// Everything except the timing fields of summary.json is a deterministic
// function of (config, dataset).
class Trainer
{
public:
    using Progress = std::function<void(const EpochRecord&)>;

    explicit Trainer(RunConfig config);

    TrainResult run(const Progress& progress = {});

    const TaggerModel<float>& model() const { return _model; }

private:
    RunConfig _config;
    TaggerModel<float> _model;
};

// Loads a checkpoint written by Trainer together with its configuration.
struct LoadedModel
{
    RunConfig config;
    TaggerModel<float> model;
    double best_dev_score = 0.0;
    std::size_t epoch = 0;
};

LoadedModel load_model(const std::filesystem::path& checkpoint);

}
