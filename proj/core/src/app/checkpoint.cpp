#include "ltree/app/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "ltree/error.hpp"

namespace ltree::app
{

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace
{

constexpr char magic[8] = {'L', 'T', 'R', 'E', 'E', 'C', 'K', 'P'};

class Writer
{
public:
    template <typename T>
    void put(T v)
    {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }

    void put_bytes(const void* data, std::size_t n)
    {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }

    void put_string(const std::string& s)
    {
        put<std::uint64_t>(s.size());
        put_bytes(s.data(), s.size());
    }

    void put_tensor(const std::string& name, const Tensor<float>& t)
    {
        put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
        put_bytes(name.data(), name.size());
        put<std::uint8_t>(0);
        put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape())
            put<std::uint64_t>(d);
        put<std::uint64_t>(t.size() * sizeof(float));
        put_bytes(t.raw(), t.size() * sizeof(float));
    }

    std::vector<std::uint8_t> bytes;
};

class Reader
{
public:
    Reader(const std::uint8_t* data, std::size_t size) :
        _data(data),
        _size(size)
    {}

    template <typename T>
    T get()
    {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }

    std::string get_string()
    {
        const auto n = get<std::uint64_t>();
        const auto* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

    NamedTensor get_tensor()
    {
        NamedTensor nt;
        const auto n = get<std::uint32_t>();
        nt.name = std::string(reinterpret_cast<const char*>(take(n)), n);
        if (get<std::uint8_t>() != 0)
            throw FormatError("checkpoint tensor '" + nt.name + "' has an unsupported dtype");
        const auto rank = get<std::uint32_t>();
        if (rank > 2)
            throw FormatError("checkpoint tensor '" + nt.name + "' has rank " + std::to_string(rank));
        Shape shape;
        for (std::uint32_t r = 0; r < rank; ++r)
            shape.push_back(get<std::uint64_t>());
        const auto nbytes = get<std::uint64_t>();
        if (nbytes != shape_size(shape) * sizeof(float))
            throw FormatError("checkpoint tensor '" + nt.name + "' byte count does not match its shape");
        nt.value = Tensor<float>(shape);
        std::memcpy(nt.value.raw(), take(nbytes), nbytes);
        return nt;
    }

    std::size_t remaining() const { return _size - _pos; }

private:
    const std::uint8_t* take(std::size_t n)
    {
        if (n > _size - _pos)
            throw FormatError("checkpoint is truncated");
        const auto* p = _data + _pos;
        _pos += n;
        return p;
    }

    const std::uint8_t* _data;
    std::size_t _size;
    std::size_t _pos = 0;
};

std::uint32_t crc(const std::uint8_t* data, std::size_t n)
{
    uLong c = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    while (n > 0)
    {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        c = crc32(c, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

}

void Checkpoint::restore_parameters(ParameterStore<float>& store) const
{
    if (parameters.size() != store.size())
        throw FormatError(
            "checkpoint holds " + std::to_string(parameters.size()) + " tensors, model expects " + std::to_string(store.size())
        );
    for (const auto& nt : parameters)
    {
        Parameter<float>* p = store.find(nt.name);
        if (p == nullptr)
            throw FormatError("checkpoint tensor '" + nt.name + "' is not a model parameter");
        if (p->value.shape() != nt.value.shape())
            throw FormatError(
                "checkpoint tensor '" + nt.name + "' has shape " + shape_string(nt.value.shape()) + ", model expects "
                + shape_string(p->value.shape())
            );
        p->value = nt.value;
    }
}

Checkpoint make_checkpoint(
    const ParameterStore<float>& store,
    const nn::AdamState<float>* optimizer,
    const std::string& config_text,
    double best_dev_score,
    std::uint64_t epoch,
    double learning_rate
)
{
    Checkpoint c;
    c.config_text = config_text;
    c.best_dev_score = best_dev_score;
    c.epoch = epoch;
    c.learning_rate = learning_rate;
    for (std::size_t i = 0; i < store.size(); ++i)
        c.parameters.push_back({store[i].name, store[i].value});
    if (optimizer != nullptr)
    {
        c.has_optimizer = true;
        c.optimizer = *optimizer;
    }
    return c;
}

std::vector<std::uint8_t> serialize(const Checkpoint& c)
{
    Writer w;
    w.put_bytes(magic, sizeof(magic));
    w.put<std::uint32_t>(c.version);
    w.put_string(c.config_text);
    w.put<double>(c.best_dev_score);
    w.put<std::uint64_t>(c.epoch);
    w.put<double>(c.learning_rate);
    w.put<std::uint64_t>(c.parameters.size());
    for (const auto& p : c.parameters)
        w.put_tensor(p.name, p.value);
    w.put<std::uint8_t>(c.has_optimizer ? 1 : 0);
    if (c.has_optimizer)
    {
        const auto& o = c.optimizer;
        w.put<double>(o.config.learning_rate);
        w.put<double>(o.config.beta1);
        w.put<double>(o.config.beta2);
        w.put<double>(o.config.epsilon);
        w.put<std::uint64_t>(o.step);
        w.put<std::uint64_t>(o.first_moment.size());
        for (std::size_t i = 0; i < o.first_moment.size(); ++i)
            w.put_tensor("m" + std::to_string(i), o.first_moment[i]);
        for (std::size_t i = 0; i < o.second_moment.size(); ++i)
            w.put_tensor("v" + std::to_string(i), o.second_moment[i]);
    }
    w.put<std::uint32_t>(crc(w.bytes.data(), w.bytes.size()));
    return std::move(w.bytes);
}

Checkpoint deserialize(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < sizeof(magic) + 8 || std::memcmp(bytes.data(), magic, sizeof(magic)) != 0)
        throw FormatError("not an ltree checkpoint (bad magic)");
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (stored != crc(bytes.data(), bytes.size() - 4))
        throw FormatError("checkpoint checksum mismatch (file is corrupted)");

    Reader r(bytes.data() + sizeof(magic), bytes.size() - sizeof(magic) - 4);
    Checkpoint c;
    c.version = r.get<std::uint32_t>();
    if (c.version != checkpoint_version)
        throw FormatError(
            "unsupported checkpoint version " + std::to_string(c.version) + " (expected " + std::to_string(checkpoint_version)
            + ")"
        );
    c.config_text = r.get_string();
    c.best_dev_score = r.get<double>();
    c.epoch = r.get<std::uint64_t>();
    c.learning_rate = r.get<double>();
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i)
        c.parameters.push_back(r.get_tensor());
    c.has_optimizer = r.get<std::uint8_t>() != 0;
    if (c.has_optimizer)
    {
        auto& o = c.optimizer;
        o.config.learning_rate = r.get<double>();
        o.config.beta1 = r.get<double>();
        o.config.beta2 = r.get<double>();
        o.config.epsilon = r.get<double>();
        o.step = r.get<std::uint64_t>();
        const auto moments = r.get<std::uint64_t>();
        for (std::uint64_t i = 0; i < moments; ++i)
            o.first_moment.push_back(r.get_tensor().value);
        for (std::uint64_t i = 0; i < moments; ++i)
            o.second_moment.push_back(r.get_tensor().value);
    }
    if (r.remaining() != 0)
        throw FormatError("checkpoint has trailing bytes");
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const auto bytes = serialize(checkpoint);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw Error("cannot write checkpoint " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

bool operator==(const Checkpoint& a, const Checkpoint& b)
{
    return a.version == b.version && a.config_text == b.config_text && a.best_dev_score == b.best_dev_score
        && a.epoch == b.epoch && a.learning_rate == b.learning_rate && a.parameters == b.parameters
        && a.has_optimizer == b.has_optimizer
        && (!a.has_optimizer
            || (a.optimizer.step == b.optimizer.step && a.optimizer.first_moment == b.optimizer.first_moment
                && a.optimizer.second_moment == b.optimizer.second_moment
                && a.optimizer.config.learning_rate == b.optimizer.config.learning_rate
                && a.optimizer.config.beta1 == b.optimizer.config.beta1
                && a.optimizer.config.beta2 == b.optimizer.config.beta2
                && a.optimizer.config.epsilon == b.optimizer.config.epsilon));
}

}
