#include "raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
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

static_assert(std::endian::native == std::endian::little,
              "QRAS payload i/o assumes a little-endian host");

} // namespace

BandGrid::BandGrid(int width, int height, float fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 1 || height < 1)
        throw ArgumentError("BandGrid dimensions must be >= 1");
}

MultiBandRaster::MultiBandRaster(int width, int height, int bands)
    : width_(width), height_(height), bands_(bands),
      values_(static_cast<std::size_t>(width) * height * bands, 0.0f) {
    if (width < 1 || height < 1 || bands < 1)
        throw ArgumentError("raster dimensions and band count must be >= 1");
}

MultiBandRaster::MultiBandRaster(int width, int height, int bands, std::vector<float> values)
    : width_(width), height_(height), bands_(bands), values_(std::move(values)) {
    if (width < 1 || height < 1 || bands < 1)
        throw ArgumentError("raster dimensions and band count must be >= 1");
    validate();
}

void MultiBandRaster::validate() const {
    const std::size_t expected = pixel_count() * static_cast<std::size_t>(bands_);
    if (values_.size() != expected)
        throw DataError("raster value count " + std::to_string(values_.size()) +
                        " does not match dimensions (expected " + std::to_string(expected) + ")");
    for (float v : values_) {
        if (!std::isfinite(v))
            throw DataError("raster contains a non-finite value");
    }
}

std::vector<double> MultiBandRaster::pixel_spectrum(int row, int col) const {
    std::vector<double> s(static_cast<std::size_t>(bands_));
    for (int b = 0; b < bands_; ++b)
        s[static_cast<std::size_t>(b)] = at(b, row, col);
    return s;
}

BandGrid MultiBandRaster::band(int index) const {
    if (index < 0 || index >= bands_)
        throw ArgumentError("band index " + std::to_string(index) + " out of range");
    BandGrid g(width_, height_);
    const std::size_t off = band_offset(index);
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(off), pixel_count(), g.values().begin());
    return g;
}

MultiBandRaster load_raster(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw DataError("cannot open raster file: " + path);

    char line[128];
    if (!std::fgets(line, sizeof(line), f.get()))
        throw DataError(path + ": missing QRAS header");
    char magic[16];
    int width = 0, height = 0, bands = 0;
    char trailing = 0;
    const int n = std::sscanf(line, "%15s %d %d %d%c", magic, &width, &height, &bands, &trailing);
    if (n < 4 || std::strcmp(magic, "QRAS1") != 0 || (n == 5 && trailing != '\n'))
        throw DataError(path + ": malformed QRAS header");
    if (width < 1 || height < 1 || bands < 1)
        throw DataError(path + ": invalid QRAS dimensions");

    const std::size_t count = static_cast<std::size_t>(width) * height * bands;
    std::vector<float> values(count);
    const std::size_t got = std::fread(values.data(), sizeof(float), count, f.get());
    if (got != count)
        throw DataError(path + ": truncated payload (" + std::to_string(got) + " of " +
                        std::to_string(count) + " values)");
    // Reject trailing bytes so dimension/payload mismatches fail both ways.
    char extra;
    if (std::fread(&extra, 1, 1, f.get()) == 1)
        throw DataError(path + ": payload longer than header-declared size");

    return MultiBandRaster(width, height, bands, std::move(values));
}

void save_raster(const MultiBandRaster& raster, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw DataError("cannot open for writing: " + path);
    if (std::fprintf(f.get(), "QRAS1 %d %d %d\n", raster.width(), raster.height(), raster.bands()) < 0)
        throw DataError("write failure: " + path);
    const std::vector<float>& v = raster.values();
    if (std::fwrite(v.data(), sizeof(float), v.size(), f.get()) != v.size())
        throw DataError("write failure: " + path);
    if (std::fflush(f.get()) != 0)
        throw DataError("write failure: " + path);
}

BandGrid compute_ndvi(const MultiBandRaster& raster, int nir_index, int red_index) {
    if (nir_index < 0 || nir_index >= raster.bands() || red_index < 0 || red_index >= raster.bands())
        throw ArgumentError("NDVI band index out of range");
    BandGrid out(raster.width(), raster.height());
    for (int r = 0; r < raster.height(); ++r) {
        for (int c = 0; c < raster.width(); ++c) {
            const double nir = raster.at(nir_index, r, c);
            const double red = raster.at(red_index, r, c);
            const double denom = nir + red;
            double v = denom == 0.0 ? 0.0 : (nir - red) / denom;
            v = std::clamp(v, -1.0, 1.0);
            out.at(r, c) = static_cast<float>(v);
        }
    }
    return out;
}

} // namespace quakeseg
