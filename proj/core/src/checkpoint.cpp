#include "dalbt/checkpoint.hpp"

#include "dalbt/error.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

namespace dalbt {
namespace {

constexpr char kMagic[8] = {'D', 'A', 'L', 'B', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError("truncated checkpoint file " + path);
    return v;
}

} // namespace

void write_checkpoint_file(const std::vector<NamedTensor>& tensors, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint file " + path + " for writing");

    out.write(kMagic, sizeof kMagic);
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        std::uint64_t n = 1;
        for (int d : t.shape) {
            if (d < 1) throw UsageError("checkpoint tensor " + t.name + " has a nonpositive dim");
            n *= static_cast<std::uint64_t>(d);
        }
        if (n != t.values.size())
            throw UsageError("checkpoint tensor " + t.name + " shape does not match its values");
        put(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put(out, static_cast<std::uint32_t>(d));
        put(out, n);
        out.write(reinterpret_cast<const char*>(t.values.data()),
                  static_cast<std::streamsize>(n * sizeof(double)));
    }
    out.flush();
    if (!out) throw IoError("write to checkpoint file " + path + " failed");
}

std::vector<NamedTensor> read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint file " + path);

    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw FormatError(path + " is not a parameter checkpoint (bad magic)");
    auto version = take<std::uint32_t>(in, path);
    if (version != kVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

    auto count = take<std::uint32_t>(in, path);
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        auto name_len = take<std::uint32_t>(in, path);
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        if (!in) throw FormatError("truncated checkpoint file " + path);
        auto rank = take<std::uint32_t>(in, path);
        t.shape.resize(rank);
        std::uint64_t expect = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            auto d = take<std::uint32_t>(in, path);
            t.shape[r] = static_cast<int>(d);
            expect *= d;
        }
        auto n = take<std::uint64_t>(in, path);
        if (n != expect)
            throw FormatError(path + ": tensor " + t.name + " count disagrees with its shape");
        t.values.resize(n);
        in.read(reinterpret_cast<char*>(t.values.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw FormatError("truncated checkpoint file " + path);
        tensors.push_back(std::move(t));
    }
    return tensors;
}

void save_checkpoint(const Network& net, const std::string& path) {
    std::vector<NamedTensor> tensors;
    tensors.reserve(net.param_infos().size());
    for (const ParamInfo& info : net.param_infos()) {
        NamedTensor t;
        t.name = info.name;
        t.shape = info.shape;
        t.values.assign(net.params().begin() + static_cast<std::ptrdiff_t>(info.offset),
                        net.params().begin() +
                            static_cast<std::ptrdiff_t>(info.offset + info.count));
        tensors.push_back(std::move(t));
    }
    write_checkpoint_file(tensors, path);
}

void load_checkpoint(Network& net, const std::string& path) {
    auto tensors = read_checkpoint_file(path);
    std::map<std::string, const NamedTensor*> by_name;
    for (const NamedTensor& t : tensors) {
        if (!by_name.emplace(t.name, &t).second)
            throw FormatError(path + ": duplicate tensor " + t.name);
    }
    if (by_name.size() != net.param_infos().size())
        throw ConsistencyError(path + " holds " + std::to_string(by_name.size()) +
                               " tensors but the network has " +
                               std::to_string(net.param_infos().size()));
    for (const ParamInfo& info : net.param_infos()) {
        auto it = by_name.find(info.name);
        if (it == by_name.end())
            throw ConsistencyError(path + " is missing tensor " + info.name);
        const NamedTensor& t = *it->second;
        if (t.shape != info.shape)
            throw ConsistencyError(path + ": tensor " + info.name +
                                   " shape does not match the network");
        std::copy(t.values.begin(), t.values.end(),
                  net.params().begin() + static_cast<std::ptrdiff_t>(info.offset));
    }
}

} // namespace dalbt
