#include "dalbt/cifar_io.hpp"

#include "dalbt/error.hpp"

#include <filesystem>
#include <fstream>

namespace dalbt {

namespace {
constexpr int kSide = 32;
constexpr int kPlane = kSide * kSide;          // 1024
constexpr int kRecord = 1 + 3 * kPlane;        // 3073
} // namespace

std::vector<Sample> load_cifar_binary(const std::vector<std::string>& paths,
                                      const std::string& origin) {
    std::vector<Sample> out;
    int next_id = 0;
    std::vector<unsigned char> rec(kRecord);
    for (const auto& path : paths) {
        std::error_code ec;
        const auto bytes = std::filesystem::file_size(path, ec);
        if (ec) throw IoError("cannot stat " + path);
        if (bytes % kRecord != 0)
            throw FormatError(path + ": size " + std::to_string(bytes) +
                              " is not a multiple of 3073");

        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path);
        const auto records = bytes / kRecord;
        out.reserve(out.size() + records);
        for (std::uintmax_t r = 0; r < records; ++r) {
            in.read(reinterpret_cast<char*>(rec.data()), kRecord);
            if (!in) throw IoError("truncated record in " + path);
            Sample s;
            s.id = next_id++;
            s.origin = origin;
            s.label = static_cast<int>(rec[0]);
            s.pixels = Image(kSide, kSide, 3);
            for (int y = 0; y < kSide; ++y)
                for (int x = 0; x < kSide; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        s.pixels.at(y, x, ch) = rec[1 + ch * kPlane + y * kSide + x] / 255.0;
            out.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace dalbt
