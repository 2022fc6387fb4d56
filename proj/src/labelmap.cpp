#include "labelmap.hpp"

#include <cctype>
#include <cstdio>
#include <memory>

#include "errors.hpp"

namespace quakeseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Next whitespace-delimited non-negative integer, skipping '#' comment lines.
int read_pnm_int(std::FILE* f, const std::string& path) {
    int ch;
    for (;;) {
        ch = std::fgetc(f);
        if (ch == EOF)
            throw DataError(path + ": unexpected end of PNM header");
        if (ch == '#') {
            while (ch != EOF && ch != '\n')
                ch = std::fgetc(f);
            continue;
        }
        if (!std::isspace(ch))
            break;
    }
    if (!std::isdigit(ch))
        throw DataError(path + ": malformed PNM header");
    long value = 0;
    while (std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        if (value > 1000000000L)
            throw DataError(path + ": PNM header value out of range");
        ch = std::fgetc(f);
    }
    return static_cast<int>(value);
}

} // namespace

LabelMap::LabelMap(int width, int height, int fill)
    : width_(width), height_(height),
      labels_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 1 || height < 1)
        throw ArgumentError("LabelMap dimensions must be >= 1");
}

LabelMap::LabelMap(int width, int height, std::vector<int> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    if (width < 1 || height < 1)
        throw ArgumentError("LabelMap dimensions must be >= 1");
    if (labels_.size() != static_cast<std::size_t>(width) * height)
        throw ArgumentError("LabelMap label count does not match dimensions");
}

int LabelMap::region_count() const {
    int max_label = -1;
    for (int v : labels_)
        if (v > max_label) max_label = v;
    return max_label + 1;
}

int validate_label_map(const LabelMap& labels) {
    const int w = labels.width();
    const int h = labels.height();
    int max_label = -1;
    for (int v : labels.labels()) {
        if (v < 0)
            throw DataError("label map contains a negative label");
        if (v > max_label) max_label = v;
    }
    const int count = max_label + 1;

    // Density and connectivity in one flood-fill sweep: each label must be
    // seen exactly once as a new component.
    std::vector<char> label_seen(static_cast<std::size_t>(count), 0);
    std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            if (visited[idx])
                continue;
            const int lab = labels.at(r, c);
            if (label_seen[static_cast<std::size_t>(lab)])
                throw DataError("label " + std::to_string(lab) + " is not 4-connected");
            label_seen[static_cast<std::size_t>(lab)] = 1;
            stack.push_back(static_cast<int>(idx));
            visited[idx] = 1;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cr = cur / w;
                const int cc = cur % w;
                const int dr[4] = {-1, 1, 0, 0};
                const int dc[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nr = cr + dr[k];
                    const int nc = cc + dc[k];
                    if (nr < 0 || nr >= h || nc < 0 || nc >= w)
                        continue;
                    const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
                    if (!visited[nidx] && labels.at(nr, nc) == lab) {
                        visited[nidx] = 1;
                        stack.push_back(static_cast<int>(nidx));
                    }
                }
            }
        }
    }
    for (int lab = 0; lab < count; ++lab)
        if (!label_seen[static_cast<std::size_t>(lab)])
            throw DataError("labels are not dense: " + std::to_string(lab) + " unused");
    return count;
}

LabelMap relabel_dense(const LabelMap& labels) {
    LabelMap out(labels.width(), labels.height());
    std::vector<int> remap(static_cast<std::size_t>(labels.region_count()), -1);
    int next = 0;
    const std::vector<int>& in = labels.labels();
    std::vector<int>& dst = out.labels();
    for (std::size_t i = 0; i < in.size(); ++i) {
        int& m = remap[static_cast<std::size_t>(in[i])];
        if (m < 0)
            m = next++;
        dst[i] = m;
    }
    return out;
}

void save_labels_pgm(const LabelMap& labels, const std::string& path) {
    const int count = labels.region_count();
    if (count > 65536)
        throw DataError("label map has " + std::to_string(count) +
                        " regions; 16-bit PGM supports at most 65536");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw DataError("cannot open for writing: " + path);
    std::fprintf(f.get(), "P5\n%d %d\n65535\n", labels.width(), labels.height());
    std::vector<std::uint8_t> row(static_cast<std::size_t>(labels.width()) * 2);
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            const int v = labels.at(r, c);
            row[static_cast<std::size_t>(c) * 2] = static_cast<std::uint8_t>(v >> 8);
            row[static_cast<std::size_t>(c) * 2 + 1] = static_cast<std::uint8_t>(v & 0xFF);
        }
        if (std::fwrite(row.data(), 1, row.size(), f.get()) != row.size())
            throw DataError("write failure: " + path);
    }
    if (std::fflush(f.get()) != 0)
        throw DataError("write failure: " + path);
}

LabelMap load_labels_pgm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw DataError("cannot open label file: " + path);
    const int c0 = std::fgetc(f.get());
    const int c1 = std::fgetc(f.get());
    if (c0 != 'P' || c1 != '5')
        throw DataError(path + ": not a binary PGM (P5) file");
    const int width = read_pnm_int(f.get(), path);
    const int height = read_pnm_int(f.get(), path);
    const int maxval = read_pnm_int(f.get(), path);
    if (width < 1 || height < 1)
        throw DataError(path + ": invalid PGM dimensions");
    if (maxval != 65535)
        throw DataError(path + ": expected 16-bit PGM (maxval 65535)");
    // Exactly one whitespace byte separates the header from the samples; the
    // read_pnm_int loop has already consumed it as the digit terminator.
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::uint8_t> raw(n * 2);
    if (std::fread(raw.data(), 1, raw.size(), f.get()) != raw.size())
        throw DataError(path + ": truncated PGM payload");
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        labels[i] = (static_cast<int>(raw[i * 2]) << 8) | raw[i * 2 + 1];
    return LabelMap(width, height, std::move(labels));
}

void save_ppm(int width, int height, const std::vector<Rgb>& pixels, const std::string& path) {
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw ArgumentError("PPM pixel count does not match dimensions");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw DataError("cannot open for writing: " + path);
    std::fprintf(f.get(), "P6\n%d %d\n255\n", width, height);
    for (const Rgb& p : pixels) {
        const std::uint8_t b[3] = {p.r, p.g, p.b};
        if (std::fwrite(b, 1, 3, f.get()) != 3)
            throw DataError("write failure: " + path);
    }
    if (std::fflush(f.get()) != 0)
        throw DataError("write failure: " + path);
}

} // namespace quakeseg
