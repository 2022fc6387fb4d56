#include <fstream>

#include "doctest.h"
#include "errors.hpp"
#include "helpers.hpp"
#include "labelmap.hpp"

using quakeseg::DataError;
using quakeseg::LabelMap;

TEST_SUITE_BEGIN("labelmap");

TEST_CASE("validate accepts a proper partition and reports its size") {
    LabelMap labels(4, 2, std::vector<int>{0, 0, 1, 1, 0, 0, 1, 1});
    CHECK(quakeseg::validate_label_map(labels) == 2);
    CHECK(labels.region_count() == 2);
}

TEST_CASE("validate rejects gaps, splits, and negatives") {
    SUBCASE("non-dense ids") {
        const LabelMap labels(2, 1, std::vector<int>{0, 2});
        CHECK_THROWS_AS(quakeseg::validate_label_map(labels), DataError);
    }
    SUBCASE("same id on two disconnected components") {
        const LabelMap labels(3, 1, std::vector<int>{0, 1, 0});
        CHECK_THROWS_AS(quakeseg::validate_label_map(labels), DataError);
    }
    SUBCASE("diagonal touch is not 4-connectivity") {
        const LabelMap labels(2, 2, std::vector<int>{0, 1, 1, 0});
        CHECK_THROWS_AS(quakeseg::validate_label_map(labels), DataError);
    }
    SUBCASE("negative id") {
        const LabelMap labels(2, 1, std::vector<int>{-1, 0});
        CHECK_THROWS_AS(quakeseg::validate_label_map(labels), DataError);
    }
}

TEST_CASE("relabel_dense numbers regions by first appearance in scan order") {
    const LabelMap sparse(3, 2, std::vector<int>{7, 7, 4, 7, 9, 4});
    const LabelMap dense = quakeseg::relabel_dense(sparse);
    CHECK(dense.labels() == std::vector<int>{0, 0, 1, 0, 2, 1});
}

TEST_CASE("pgm io round-trips ids beyond one byte") {
    // 300 single-pixel columns forces 16-bit samples and checks byte order.
    const int w = 300;
    std::vector<int> ids(static_cast<std::size_t>(w));
    for (int j = 0; j < w; ++j) ids[static_cast<std::size_t>(j)] = j;
    const LabelMap labels(w, 1, ids);

    qtest::TempFile file("labels");
    quakeseg::save_labels_pgm(labels, file.str());
    const LabelMap back = quakeseg::load_labels_pgm(file.str());
    CHECK(back == labels);

    std::ifstream in(file.str(), std::ios::binary);
    std::string magic;
    in >> magic;
    CHECK(magic == "P5");
}

TEST_CASE("pgm save refuses maps that overflow 16 bits") {
    const int side = 260; // 67600 single-pixel regions
    std::vector<int> ids(static_cast<std::size_t>(side) * side);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    const LabelMap labels(side, side, ids);
    CHECK_THROWS_AS(quakeseg::save_labels_pgm(labels, "/tmp/qks_never_written.pgm"), DataError);
}

TEST_CASE("pgm loader rejects other formats") {
    qtest::TempFile file("not_pgm");
    std::ofstream out(file.str(), std::ios::binary);
    out << "P2\n2 1\n65535\n0 1\n";
    out.close();
    CHECK_THROWS_AS(quakeseg::load_labels_pgm(file.str()), DataError);
}

TEST_CASE("ppm writer emits a well-formed binary image") {
    qtest::TempFile file("overlay");
    const std::vector<quakeseg::Rgb> pixels = {
        {255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {9, 8, 7}};
    quakeseg::save_ppm(2, 2, pixels, file.str());

    std::ifstream in(file.str(), std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P6");
    CHECK(w == 2);
    CHECK(h == 2);
    CHECK(maxval == 255);
    in.get(); // single whitespace after the header
    char rgb[12];
    in.read(rgb, 12);
    CHECK(in.gcount() == 12);
    CHECK(static_cast<unsigned char>(rgb[0]) == 255);
    CHECK(static_cast<unsigned char>(rgb[11]) == 7);
}

TEST_SUITE_END();
