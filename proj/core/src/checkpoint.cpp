#include "tsadv/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace tsadv {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'A', 'D', 'V', 'C', 'K', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_string(std::ofstream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw Error("load_checkpoint: truncated file '" + path + "'");
    return v;
}

std::string get_string(std::ifstream& in, const std::string& path) {
    const auto n = get<std::uint32_t>(in, path);
    if (n > (1u << 20)) throw Error("load_checkpoint: corrupt string length in '" + path + "'");
    std::string s(n, '\0');
    if (!in.read(s.data(), n)) throw Error("load_checkpoint: truncated file '" + path + "'");
    return s;
}

}  // namespace

void save_checkpoint(const ForecastModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_checkpoint: cannot open '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kVersion);

    const ModelDescriptor& d = model.descriptor();
    put<std::uint8_t>(out, d.kind == ModelKind::vanilla_lstm ? 0 : 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.input_size));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.hidden_size));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.dense_size));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(d.lookback));
    put<double>(out, d.dropout_rate);
    put<std::uint64_t>(out, d.init_seed);

    const auto named = model.named_parameters();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
    for (const auto& [name, tensor] : named) {
        put_string(out, name);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
        for (std::size_t dim : tensor.shape()) put<std::uint64_t>(out, dim);
        const auto data = tensor.data();
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) throw Error("save_checkpoint: write failed for '" + path + "'");
}

std::unique_ptr<ForecastModel> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_checkpoint: cannot open '" + path + "'");

    char magic[8] = {};
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("load_checkpoint: '" + path + "' is not a tsadv checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion)
        throw Error("load_checkpoint: '" + path + "' has format version " +
                    std::to_string(version) + ", expected " + std::to_string(kVersion));

    ModelDescriptor d;
    d.kind = get<std::uint8_t>(in, path) == 0 ? ModelKind::vanilla_lstm
                                              : ModelKind::encoder_decoder_lstm;
    d.input_size = get<std::uint32_t>(in, path);
    d.hidden_size = get<std::uint32_t>(in, path);
    d.dense_size = get<std::uint32_t>(in, path);
    d.lookback = get<std::uint32_t>(in, path);
    d.dropout_rate = get<double>(in, path);
    d.init_seed = get<std::uint64_t>(in, path);

    auto model = make_model(d);
    auto named = model->named_parameters();
    const auto count = get<std::uint32_t>(in, path);
    if (count != named.size())
        throw Error("load_checkpoint: '" + path + "' carries " + std::to_string(count) +
                    " parameters, architecture expects " + std::to_string(named.size()));
    for (auto& [name, tensor] : named) {
        const std::string stored = get_string(in, path);
        if (stored != name)
            throw Error("load_checkpoint: parameter order mismatch in '" + path + "': got '" +
                        stored + "', expected '" + name + "'");
        const auto rank = get<std::uint8_t>(in, path);
        if (rank != tensor.rank())
            throw Error("load_checkpoint: rank mismatch for '" + name + "' in '" + path + "'");
        for (std::size_t dim : tensor.shape()) {
            const auto stored_dim = get<std::uint64_t>(in, path);
            if (stored_dim != dim)
                throw Error("load_checkpoint: shape mismatch for '" + name + "' in '" + path + "'");
        }
        auto data = tensor.mutable_data();
        if (!in.read(reinterpret_cast<char*>(data.data()),
                     static_cast<std::streamsize>(data.size() * sizeof(double))))
            throw Error("load_checkpoint: truncated file '" + path + "'");
    }
    return model;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("file_hash: cannot open '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

}  // namespace tsadv
