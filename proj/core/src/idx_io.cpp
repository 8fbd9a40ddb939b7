#include "dalbt/idx_io.hpp"

#include "dalbt/error.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace dalbt {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803; // 2051
constexpr std::uint32_t kLabelsMagic = 0x00000801; // 2049

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated header in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

std::vector<Sample> load_idx(const std::string& images_path, const std::string& labels_path,
                             const std::string& origin) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels_path);

    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != kImagesMagic)
        throw FormatError("bad image magic " + std::to_string(img_magic) + " in " + images_path);
    const std::uint32_t count = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);

    const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != kLabelsMagic)
        throw FormatError("bad label magic " + std::to_string(lab_magic) + " in " + labels_path);
    const std::uint32_t lab_count = read_be_u32(lab, labels_path);
    if (lab_count != count)
        throw ConsistencyError("image count " + std::to_string(count) + " != label count " +
                               std::to_string(lab_count));

    const std::size_t pixels_per = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(pixels_per);
    std::vector<Sample> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels_per));
        if (!img) throw FormatError("truncated image data in " + images_path);
        char label = 0;
        lab.read(&label, 1);
        if (!lab) throw FormatError("truncated label data in " + labels_path);

        Sample s;
        s.id = static_cast<int>(i);
        s.origin = origin;
        s.label = static_cast<int>(static_cast<unsigned char>(label));
        s.pixels = Image(static_cast<int>(rows), static_cast<int>(cols), 1);
        for (std::size_t p = 0; p < pixels_per; ++p) s.pixels.v[p] = buf[p] / 255.0;
        out.push_back(std::move(s));
    }
    return out;
}

void save_idx(const std::vector<Sample>& samples, const std::string& images_path,
              const std::string& labels_path) {
    if (samples.empty()) throw UsageError("save_idx: no samples");
    const Image& first = samples.front().pixels;
    if (first.c != 1) throw UsageError("save_idx: IDX images are single-channel");

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open " + images_path + " for writing");
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open " + labels_path + " for writing");

    write_be_u32(img, kImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(samples.size()));
    write_be_u32(img, static_cast<std::uint32_t>(first.h));
    write_be_u32(img, static_cast<std::uint32_t>(first.w));
    write_be_u32(lab, kLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(samples.size()));

    std::vector<unsigned char> buf(first.size());
    for (const auto& s : samples) {
        if (!s.pixels.same_shape(first)) throw ConsistencyError("save_idx: mixed image shapes");
        if (!s.label) throw ConsistencyError("save_idx: unlabeled sample " + std::to_string(s.id));
        for (std::size_t p = 0; p < buf.size(); ++p)
            buf[p] = static_cast<unsigned char>(std::lround(s.pixels.v[p] * 255.0));
        img.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const char label = static_cast<char>(*s.label);
        lab.write(&label, 1);
    }
    if (!img || !lab) throw IoError("write failure in save_idx");
}

} // namespace dalbt
