#include "ltree/listops/listops.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ltree/error.hpp"

namespace ltree::listops
{

std::string_view operator_token(Operator op)
{
    switch (op)
    {
        case Operator::max: return "[max";
        case Operator::min: return "[min";
        case Operator::med: return "[med";
        case Operator::sum_mod: return "[sm";
    }
    return "?";
}

namespace
{

constexpr Operator all_operators[] = {Operator::max, Operator::min, Operator::med, Operator::sum_mod};

bool operator_from_token(std::string_view token, Operator& op)
{
    for (Operator o : all_operators)
        if (operator_token(o) == token)
        {
            op = o;
            return true;
        }
    return false;
}

bool digit_from_token(std::string_view token, int& value)
{
    if (token.size() != 1 || token[0] < '0' || token[0] > '9')
        return false;
    value = token[0] - '0';
    return true;
}

void linearize_into(const Expression& e, std::vector<std::string>& out)
{
    out.emplace_back(operator_token(e.op));
    for (const auto& operand : e.operands)
    {
        if (operand.is_value)
            out.push_back(std::to_string(operand.value));
        else
            linearize_into(operand.nested.front(), out);
    }
    out.emplace_back(close_token);
}

Expression parse_at(std::span<const std::string> tokens, std::size_t& pos)
{
    Expression e;
    if (pos >= tokens.size() || !operator_from_token(tokens[pos], e.op))
        throw FormatError("listops: expected an operator at token " + std::to_string(pos));
    ++pos;
    while (true)
    {
        if (pos >= tokens.size())
            throw FormatError("listops: unterminated expression");
        if (tokens[pos] == close_token)
        {
            ++pos;
            break;
        }
        int v = 0;
        if (digit_from_token(tokens[pos], v))
        {
            e.operands.push_back(Expression::Operand::digit(v));
            ++pos;
        }
        else
            e.operands.push_back(Expression::Operand::expression(parse_at(tokens, pos)));
    }
    if (e.operands.empty())
        throw FormatError("listops: operator without operands");
    return e;
}

// Appends the tokens of `e` to `ex` with the operator attached to `head`.
void convert_into(const Expression& e, int head, Example& ex)
{
    const int self = static_cast<int>(ex.tokens.size());
    ex.tokens.emplace_back(operator_token(e.op));
    ex.heads.push_back(head);
    ex.tags.push_back(std::to_string(e.operands.size()));
    for (const auto& operand : e.operands)
    {
        if (operand.is_value)
        {
            ex.tokens.push_back(std::to_string(operand.value));
            ex.heads.push_back(self);
            ex.tags.emplace_back(none_tag);
        }
        else
            convert_into(operand.nested.front(), self, ex);
    }
    ex.tokens.emplace_back(close_token);
    ex.heads.push_back(self);
    ex.tags.emplace_back(none_tag);
}

Expression sample_expression(Rng& rng, const GeneratorConfig& cfg, std::size_t level)
{
    Expression e;
    e.op = all_operators[rng.below(4)];
    const std::size_t arity = static_cast<std::size_t>(rng.between(static_cast<int>(cfg.min_arity), static_cast<int>(cfg.max_arity)));
    for (std::size_t a = 0; a < arity; ++a)
    {
        if (level < cfg.max_depth && rng.bernoulli(cfg.nesting_probability))
            e.operands.push_back(Expression::Operand::expression(sample_expression(rng, cfg, level + 1)));
        else
            e.operands.push_back(Expression::Operand::digit(static_cast<int>(rng.below(10))));
    }
    return e;
}

std::size_t token_count(const Expression& e)
{
    std::size_t n = 2;
    for (const auto& operand : e.operands)
        n += operand.is_value ? 1 : token_count(operand.nested.front());
    return n;
}

}

int evaluate(const Expression& e)
{
    std::vector<int> values;
    for (const auto& operand : e.operands)
        values.push_back(operand.is_value ? operand.value : evaluate(operand.nested.front()));
    switch (e.op)
    {
        case Operator::max: return *std::max_element(values.begin(), values.end());
        case Operator::min: return *std::min_element(values.begin(), values.end());
        case Operator::med:
        {
            std::sort(values.begin(), values.end());
            return values[(values.size() - 1) / 2];
        }
        case Operator::sum_mod: return std::accumulate(values.begin(), values.end(), 0) % 10;
    }
    return 0;
}

std::size_t depth(const Expression& e)
{
    std::size_t d = 0;
    for (const auto& operand : e.operands)
        if (!operand.is_value)
            d = std::max(d, depth(operand.nested.front()));
    return d + 1;
}

std::vector<std::string> linearize(const Expression& e)
{
    std::vector<std::string> out;
    linearize_into(e, out);
    return out;
}

Expression parse_expression(std::span<const std::string> tokens)
{
    std::size_t pos = 0;
    Expression e = parse_at(tokens, pos);
    if (pos != tokens.size())
        throw FormatError("listops: trailing tokens after expression");
    return e;
}

Example to_dependencies(const Expression& e)
{
    Example ex;
    ex.tokens.emplace_back(root_token);
    convert_into(e, 0, ex);
    return ex;
}

Example to_dependencies(std::span<const std::string> tokens)
{
    if (!tokens.empty() && tokens.front() == root_token)
        tokens = tokens.subspan(1);
    return to_dependencies(parse_expression(tokens));
}

std::vector<Example> generate(const GeneratorConfig& cfg, std::uint64_t seed, std::uint64_t stream)
{
    if (cfg.max_depth < 1 || cfg.min_arity < 1 || cfg.max_arity < cfg.min_arity || cfg.max_length < 1)
        throw InvalidArgument("listops generate: bounds must be positive with min_arity <= max_arity");
    if (cfg.max_length < cfg.min_arity + 2)
        throw InvalidArgument(
            "listops generate: max_length " + std::to_string(cfg.max_length) + " cannot fit an operator with "
            + std::to_string(cfg.min_arity) + " operands"
        );
    if (!(cfg.nesting_probability >= 0.0 && cfg.nesting_probability <= 1.0))
        throw InvalidArgument("listops generate: nesting probability must be in [0, 1]");

    constexpr std::size_t max_attempts = 100000;
    std::vector<Example> out;
    out.reserve(cfg.count);
    for (std::size_t i = 0; i < cfg.count; ++i)
    {
        Rng rng = Rng::substream(seed, stream, i);
        std::size_t attempt = 0;
        while (true)
        {
            Expression e = sample_expression(rng, cfg, 1);
            if (token_count(e) <= cfg.max_length)
            {
                out.push_back(to_dependencies(e));
                break;
            }
            if (++attempt >= max_attempts)
                throw InvalidArgument("listops generate: length bound is unsatisfiable in practice");
        }
    }
    return out;
}

std::string validate(const Example& ex)
{
    const std::size_t n = ex.heads.size();
    if (ex.tokens.size() != n + 1 || ex.tags.size() != n)
        return "length mismatch between tokens, heads and tags";
    if (ex.tokens.empty() || ex.tokens[0] != root_token)
        return "first token is not the root marker";
    if (auto why = projective_tree_violation(ex.heads); !why.empty())
        return why;
    std::vector<std::size_t> out_degree(n + 1, 0);
    for (int h : ex.heads)
        ++out_degree[static_cast<std::size_t>(h)];
    Operator op;
    for (std::size_t m = 1; m <= n; ++m)
    {
        const bool is_op = operator_from_token(ex.tokens[m], op);
        const std::string expected = is_op ? std::to_string(out_degree[m] - 1) : std::string(none_tag);
        if (ex.tags[m - 1] != expected)
            return "token " + std::to_string(m) + " has tag " + ex.tags[m - 1] + ", expected " + expected;
    }
    return {};
}

Vocabulary::Vocabulary() :
    _tokens{"<unk>", std::string(root_token), "[max", "[min", "[med", "[sm", std::string(close_token)}
{
    for (int d = 0; d <= 9; ++d)
        _tokens.push_back(std::to_string(d));
}

std::size_t Vocabulary::id(std::string_view token) const
{
    for (std::size_t i = 1; i < _tokens.size(); ++i)
        if (_tokens[i] == token)
            return i;
    return 0;
}

LabelSet::LabelSet(std::size_t max_arity)
{
    if (max_arity < 1)
        throw InvalidArgument("label set: max arity must be at least 1");
    _labels.emplace_back(none_tag);
    for (std::size_t k = 1; k <= max_arity; ++k)
        _labels.push_back(std::to_string(k));
}

int LabelSet::index(std::string_view tag) const
{
    for (std::size_t i = 0; i < _labels.size(); ++i)
        if (_labels[i] == tag)
            return static_cast<int>(i);
    throw InvalidArgument("tag '" + std::string(tag) + "' is outside the label set");
}

std::string to_json_line(const Example& ex)
{
    nlohmann::ordered_json j;
    j["tokens"] = ex.tokens;
    j["heads"] = ex.heads;
    j["tags"] = ex.tags;
    return j.dump();
}

Example from_json_line(std::string_view line)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(std::string("dataset: invalid JSON line: ") + e.what());
    }
    Example ex;
    try
    {
        ex.tokens = j.at("tokens").get<std::vector<std::string>>();
        ex.heads = j.at("heads").get<Heads>();
        ex.tags = j.at("tags").get<std::vector<std::string>>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(std::string("dataset: missing or mistyped field: ") + e.what());
    }
    if (ex.tokens.size() != ex.heads.size() + 1 || ex.tags.size() != ex.heads.size())
        throw FormatError("dataset: expected |tokens| = |heads| + 1 = |tags| + 1");
    return ex;
}

void write_dataset(const std::filesystem::path& path, std::span<const Example> examples)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    for (const auto& ex : examples)
        out << to_json_line(ex) << '\n';
    if (!out)
        throw Error("failed writing " + path.string());
}

std::vector<Example> read_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open dataset " + path.string());
    std::vector<Example> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        try
        {
            out.push_back(from_json_line(line));
        }
        catch (const FormatError& e)
        {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

double attachment_score(std::span<const int> predicted, std::span<const int> gold)
{
    if (predicted.size() != gold.size())
        throw InvalidArgument("attachment_score: length mismatch");
    if (gold.empty())
        return 1.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        correct += predicted[i] == gold[i];
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double tagging_accuracy(std::span<const int> predicted, std::span<const int> gold)
{
    if (predicted.size() != gold.size())
        throw InvalidArgument("tagging_accuracy: length mismatch");
    if (gold.empty())
        return 1.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        correct += predicted[i] == gold[i];
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double operator_accuracy(std::span<const int> predicted, std::span<const int> gold)
{
    if (predicted.size() != gold.size())
        throw InvalidArgument("operator_accuracy: length mismatch");
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < gold.size(); ++i)
        if (gold[i] != 0)
        {
            ++total;
            correct += predicted[i] == gold[i];
        }
    return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double chain_overlap(std::span<const Example> examples)
{
    std::size_t hit = 0, total = 0;
    for (const auto& ex : examples)
        for (std::size_t m = 1; m <= ex.heads.size(); ++m)
        {
            ++total;
            hit += ex.heads[m - 1] == static_cast<int>(m) - 1;
        }
    return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}
