#ifndef QUAKESEG_RASTER_HPP
#define QUAKESEG_RASTER_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace quakeseg {

// Single-band grid of reals. Holds derived products such as NDVI.
class BandGrid {
public:
    BandGrid(int width, int height, float fill = 0.0f);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    float at(int row, int col) const { return values_[static_cast<std::size_t>(row) * width_ + col]; }
    float& at(int row, int col) { return values_[static_cast<std::size_t>(row) * width_ + col]; }

    const std::vector<float>& values() const noexcept { return values_; }
    std::vector<float>& values() noexcept { return values_; }

private:
    int width_;
    int height_;
    std::vector<float> values_;
};

// B-band reflectance raster, band-sequential in memory (all of band 0
// row-major, then band 1, ...). Values must be finite; reflectance is not
// constrained to [0,1] since raw sensor counts vary.
class MultiBandRaster {
public:
    MultiBandRaster(int width, int height, int bands);
    MultiBandRaster(int width, int height, int bands, std::vector<float> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int bands() const noexcept { return bands_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

    float at(int band, int row, int col) const {
        return values_[band_offset(band) + static_cast<std::size_t>(row) * width_ + col];
    }
    float& at(int band, int row, int col) {
        return values_[band_offset(band) + static_cast<std::size_t>(row) * width_ + col];
    }

    // Spectral vector of one pixel (length B).
    std::vector<double> pixel_spectrum(int row, int col) const;

    BandGrid band(int index) const;

    const std::vector<float>& values() const noexcept { return values_; }

private:
    std::size_t band_offset(int band) const noexcept { return static_cast<std::size_t>(band) * pixel_count(); }
    void validate() const;

    int width_;
    int height_;
    int bands_;
    std::vector<float> values_;
};

// QRAS container: ASCII line "QRAS1 <width> <height> <bands>\n" followed by
// width*height*bands little-endian IEEE-754 32-bit floats, band-sequential.
MultiBandRaster load_raster(const std::string& path);
void save_raster(const MultiBandRaster& raster, const std::string& path);

// (NIR - RED) / (NIR + RED), 0 where the denominator is 0, clamped to [-1, 1]
// so the result stays in range for rasters with negative reflectance values.
BandGrid compute_ndvi(const MultiBandRaster& raster, int nir_index, int red_index);

} // namespace quakeseg

#endif
