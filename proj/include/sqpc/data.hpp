#pragma once

#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "sqpc/core.hpp"
#include "sqpc/linalg.hpp"

namespace sqpc {

struct Dataset {
    std::vector<VarDomain> domains;
    MatrixR train;
    MatrixR valid;
    MatrixR test;

    int num_vars() const { return static_cast<int>(domains.size()); }

    void validate() const {
        for (const MatrixR* m : {&train, &valid, &test}) {
            require(m->rows() == 0 || m->cols() == num_vars(), ErrorKind::input, "dataset split has the wrong number of columns");
            for (Eigen::Index r = 0; r < m->rows(); ++r)
                for (int v = 0; v < num_vars(); ++v) check_value(domains, v, (*m)(r, v));
        }
    }
};

// Shuffles rows with the seed and cuts them into train/valid/test by fractions.
inline Dataset split_rows(const MatrixR& X, std::vector<VarDomain> domains, double valid_frac, double test_frac, std::uint64_t seed) {
    require(valid_frac >= 0 && test_frac >= 0 && valid_frac + test_frac < 1, ErrorKind::input, "invalid split fractions");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(X.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<Eigen::Index>(idx.size());
    const auto nv = static_cast<Eigen::Index>(std::floor(valid_frac * static_cast<double>(n)));
    const auto nt = static_cast<Eigen::Index>(std::floor(test_frac * static_cast<double>(n)));
    auto take = [&](Eigen::Index b, Eigen::Index e) {
        MatrixR m(e - b, X.cols());
        for (Eigen::Index r = b; r < e; ++r) m.row(r - b) = X.row(idx[static_cast<std::size_t>(r)]);
        return m;
    };
    Dataset d;
    d.domains = std::move(domains);
    d.train = take(0, n - nv - nt);
    d.valid = take(n - nv - nt, n - nt);
    d.test = take(n - nt, n);
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// IDX files

struct IdxArray {
    std::vector<int> dims;
    std::vector<std::uint8_t> data;
};

inline IdxArray read_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::input, "cannot open IDX file " + path);
    auto be32 = [&]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        require(static_cast<bool>(in), ErrorKind::input, "truncated IDX header in " + path);
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
    };
    const std::uint32_t magic = be32();
    require(magic == 0x00000803u || magic == 0x00000801u, ErrorKind::input,
            "unsupported IDX magic in " + path + " (expected 0x00000803 or 0x00000801)");
    IdxArray a;
    const int ndim = static_cast<int>(magic & 0xff);
    std::size_t total = 1;
    for (int k = 0; k < ndim; ++k) {
        a.dims.push_back(static_cast<int>(be32()));
        total *= static_cast<std::size_t>(a.dims.back());
    }
    a.data.resize(total);
    in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(total));
    require(static_cast<std::size_t>(in.gcount()) == total, ErrorKind::input, "truncated IDX payload in " + path);
    return a;
}

inline void write_idx(const std::string& path, const IdxArray& a) {
    require(a.dims.size() == 1 || a.dims.size() == 3, ErrorKind::input, "IDX writer supports labels (1-D) and images (3-D)");
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::input, "cannot write IDX file " + path);
    auto be32 = [&](std::uint32_t v) {
        const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
        out.write(b, 4);
    };
    be32(0x00000800u | static_cast<std::uint32_t>(a.dims.size()));
    for (int d : a.dims) be32(static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size()));
}

// Images as rows of pixel values; rows × cols per image.
inline MatrixR idx_images(const IdxArray& a, int* rows = nullptr, int* cols = nullptr) {
    require(a.dims.size() == 3, ErrorKind::input, "image IDX needs three dimensions");
    const int n = a.dims[0], h = a.dims[1], w = a.dims[2];
    if (rows) *rows = h;
    if (cols) *cols = w;
    MatrixR X(n, h * w);
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < h * w; ++p) X(i, p) = a.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(h * w) + static_cast<std::size_t>(p)];
    return X;
}

// Thresholds to {0, 1}: x >= threshold maps to 1.
inline MatrixR binarize(const MatrixR& X, double threshold) {
    return (X.array() >= threshold).cast<double>().matrix();
}

// ---------------------------------------------------------------------------
// CSV files: numeric columns, optional header line.

inline MatrixR read_csv(const std::string& path, bool header = false) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::input, "cannot open CSV file " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (header && lineno == 1) continue;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorKind::input, path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
        }
        require(rows.empty() || row.size() == rows.front().size(), ErrorKind::input,
                path + ":" + std::to_string(lineno) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), ErrorKind::input, "CSV file " + path + " has no rows");
    MatrixR X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return X;
}

// ---------------------------------------------------------------------------
// Synthetic 2-D data

inline constexpr double rings_period = 6.0;
inline constexpr double spiral_period = 12.0;
inline const std::vector<double>& ring_radii() {
    static const std::vector<double> r{1.0, 2.0};
    return r;
}

// Domain side length used for each generator.
inline double synth_period(const std::string& kind) {
    if (kind == "rings") return rings_period;
    if (kind == "spiral") return spiral_period;
    throw Error(ErrorKind::input, "unknown synthetic dataset '" + kind + "'");
}

// Point of the Archimedean spiral r = 0.4θ, θ ∈ [π/2, 4π], centred in the domain.
inline std::pair<double, double> spiral_point(double theta) {
    const double c = spiral_period / 2, r = 0.4 * theta;
    return {c + r * std::cos(theta), c + r * std::sin(theta)};
}

// n samples; points leaving [0, P]² under the noise are redrawn.
inline MatrixR synth_data(const std::string& kind, int n, double noise_sd, Rng& rng) {
    require(n >= 1, ErrorKind::input, "n must be >= 1");
    require(noise_sd >= 0, ErrorKind::input, "noise_sd must be >= 0");
    const double P = synth_period(kind);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixR X(n, 2);
    for (int i = 0; i < n;) {
        double x, y;
        if (kind == "rings") {
            const auto& radii = ring_radii();
            const double r = radii[static_cast<std::size_t>(unif(rng) * static_cast<double>(radii.size())) % radii.size()];
            const double t = 2 * std::numbers::pi * unif(rng);
            x = P / 2 + r * std::cos(t);
            y = P / 2 + r * std::sin(t);
        } else {
            std::tie(x, y) = spiral_point(std::numbers::pi / 2 + unif(rng) * 3.5 * std::numbers::pi);
        }
        x += noise_sd * gauss(rng);
        y += noise_sd * gauss(rng);
        if (x < 0 || x > P || y < 0 || y > P) continue;
        X(i, 0) = x;
        X(i, 1) = y;
        ++i;
    }
    return X;
}

inline Dataset synth_dataset(const std::string& kind, int n_train, int n_valid, int n_test, double noise_sd, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    const double P = synth_period(kind);
    d.domains = {VarDomain::interval(0, P), VarDomain::interval(0, P)};
    d.train = synth_data(kind, n_train, noise_sd, rng);
    d.valid = synth_data(kind, std::max(1, n_valid), noise_sd, rng);
    d.test = synth_data(kind, std::max(1, n_test), noise_sd, rng);
    return d;
}

}  // namespace sqpc
