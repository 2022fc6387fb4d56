#ifndef QUAKESEG_LABELMAP_HPP
#define QUAKESEG_LABELMAP_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace quakeseg {

// Per-pixel region identifier. A valid map is a total partition whose labels
// are dense {0..R-1} and whose regions are each one 4-connected component.
class LabelMap {
public:
    LabelMap(int width, int height, int fill = 0);
    LabelMap(int width, int height, std::vector<int> labels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    int at(int row, int col) const { return labels_[static_cast<std::size_t>(row) * width_ + col]; }
    int& at(int row, int col) { return labels_[static_cast<std::size_t>(row) * width_ + col]; }

    const std::vector<int>& labels() const noexcept { return labels_; }
    std::vector<int>& labels() noexcept { return labels_; }

    // Number of regions assuming dense labels (max + 1).
    int region_count() const;

    bool operator==(const LabelMap& other) const = default;

private:
    int width_;
    int height_;
    std::vector<int> labels_;
};

// Throws DataError unless `labels` is a total partition with dense labels and
// 4-connected regions. Returns the region count on success.
int validate_label_map(const LabelMap& labels);

// Renumber labels densely in row-major first-appearance order.
LabelMap relabel_dense(const LabelMap& labels);

// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Region ids above
// 65535 cannot be represented and are rejected at save time.
void save_labels_pgm(const LabelMap& labels, const std::string& path);
LabelMap load_labels_pgm(const std::string& path);

// Binary PPM (P6) writer for RGB visualizations.
struct Rgb {
    std::uint8_t r, g, b;
};
void save_ppm(int width, int height, const std::vector<Rgb>& pixels, const std::string& path);

} // namespace quakeseg

#endif
