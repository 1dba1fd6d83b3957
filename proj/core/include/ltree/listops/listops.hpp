#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltree/parser/tree.hpp"
#include "ltree/sampler/rng.hpp"

namespace ltree::listops
{

enum class Operator
{
    max,
    min,
    med,
    sum_mod
};

// "[max", "[min", "[med", "[sm".
std::string_view operator_token(Operator op);

inline constexpr std::string_view root_token = "*";
inline constexpr std::string_view close_token = "]";
inline constexpr std::string_view none_tag = "NONE";

// Prefix-notation expression: an operator applied to operands that are
// digits 0-9 or nested expressions.
struct Expression
{
    Operator op = Operator::max;
    struct Operand;
    std::vector<Operand> operands;
};

struct Expression::Operand
{
    bool is_value = true;
    int value = 0;
    std::vector<Expression> nested; // exactly one element when !is_value

    static Operand digit(int v) { return {true, v, {}}; }
    static Operand expression(Expression e) { return {false, 0, {std::move(e)}}; }
};

// MAX, MIN, MED (lower median for an even count) and SM (sum modulo 10).
int evaluate(const Expression& e);

std::size_t depth(const Expression& e);

// Token stream "[op a b ... ]" without the root marker.
std::vector<std::string> linearize(const Expression& e);

// Inverse of linearize; throws FormatError on malformed nesting.
Expression parse_expression(std::span<const std::string> tokens);

// A dependency-annotated instance. tokens[0] is the root marker "*";
// heads[m - 1] and tags[m - 1] describe token m.
struct Example
{
    std::vector<std::string> tokens;
    Heads heads;
    std::vector<std::string> tags;

    std::size_t words() const { return heads.size(); }
    bool operator==(const Example&) const = default;
};

// Head percolation (a phrase's head is the head of its left argument): every
// operator token heads the head of each argument and its own closing
// bracket; the root heads the outermost operator. Operators are tagged with
// their operand count, every other token with NONE.
Example to_dependencies(const Expression& e);

// Parses the token stream (with or without the leading root marker) and
// converts it. Throws FormatError on malformed nesting.
Example to_dependencies(std::span<const std::string> tokens);

struct GeneratorConfig
{
    std::size_t count = 1000;
    std::size_t max_depth = 4;
    std::size_t min_arity = 2;
    std::size_t max_arity = 5;
    // Expression tokens, root marker excluded.
    std::size_t max_length = 40;
    // Probability that an operand below the depth limit is a nested expression.
    double nesting_probability = 0.3;
};

// Samples `count` expressions; example i uses the substream (seed, stream, i),
// so results do not depend on generation order. Expressions longer than
// max_length are rejected and resampled. Throws InvalidArgument for
// unsatisfiable bounds.
std::vector<Example> generate(const GeneratorConfig& config, std::uint64_t seed, std::uint64_t stream = 0);

// Empty if the example is consistent: projective gold tree, root marker
// first, operator out-degree - 1 equal to the tag, NONE elsewhere.
std::string validate(const Example& example);

// Closed token vocabulary; id 0 is the unknown token.
class Vocabulary
{
public:
    Vocabulary();

    std::size_t size() const { return _tokens.size(); }
    std::size_t id(std::string_view token) const;
    const std::string& token(std::size_t id) const { return _tokens.at(id); }

private:
    std::vector<std::string> _tokens;
};

// Output labels: index 0 is NONE, index k is valency k.
class LabelSet
{
public:
    explicit LabelSet(std::size_t max_arity = 5);

    std::size_t size() const { return _labels.size(); }
    std::size_t max_arity() const { return _labels.size() - 1; }
    // Throws InvalidArgument for a tag outside the set.
    int index(std::string_view tag) const;
    const std::string& label(std::size_t index) const { return _labels.at(index); }

private:
    std::vector<std::string> _labels;
};

// One JSON object per line with fields "tokens", "heads" and "tags" (UTF-8,
// LF line endings).
void write_dataset(const std::filesystem::path& path, std::span<const Example> examples);
std::vector<Example> read_dataset(const std::filesystem::path& path);

std::string to_json_line(const Example& example);
Example from_json_line(std::string_view line);

// Fraction of tokens whose predicted head equals the gold head.
double attachment_score(std::span<const int> predicted, std::span<const int> gold);

// Exact-match fraction over aligned tag sequences (root excluded by the
// caller).
double tagging_accuracy(std::span<const int> predicted, std::span<const int> gold);

// Accuracy restricted to positions whose gold label is not NONE (index 0).
double operator_accuracy(std::span<const int> predicted, std::span<const int> gold);

// Fraction of tokens whose gold head is the previous token (left chain).
double chain_overlap(std::span<const Example> examples);

}
