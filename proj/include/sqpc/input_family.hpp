#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "sqpc/core.hpp"
#include "sqpc/linalg.hpp"

namespace sqpc {

// A collection of K univariate functions over one variable domain.
//
// categorical: f_i(x) = table(i, x)
// fourier:     f_i(x) = coeff_i * exp(2πi freq_i (x + bias) / period), domain [0, period]
// gaussian:    f_i(x) = N(x; mu_i, sigma_i), real line
struct InputFamily {
    enum class Kind { categorical, fourier, gaussian };

    Kind kind = Kind::categorical;
    std::string label = "categorical";
    VarDomain domain;
    bool orthonormal = false;
    bool learnable = true;
    std::string origin;  // factor description for product families

    MatrixC table;

    double period = 1.0;
    double bias = 0.0;
    std::vector<int> freq;
    std::vector<cplx> coeff;

    std::vector<double> mu;
    std::vector<double> sigma;

    int width() const {
        switch (kind) {
        case Kind::categorical: return static_cast<int>(table.rows());
        case Kind::fourier: return static_cast<int>(freq.size());
        case Kind::gaussian: return static_cast<int>(mu.size());
        }
        return 0;
    }

    bool closed_form_gram() const { return true; }
    bool squarable() const { return kind != Kind::gaussian; }

    void eval_into(double x, cplx* out) const {
        require(domain.contains(x), ErrorKind::domain, "value " + std::to_string(x) + " outside family domain");
        const int K = width();
        switch (kind) {
        case Kind::categorical: {
            const auto c = static_cast<Eigen::Index>(x);
            for (int i = 0; i < K; ++i) out[i] = table(i, c);
            break;
        }
        case Kind::fourier: {
            const double t = 2.0 * std::numbers::pi * (x + bias) / period;
            for (int i = 0; i < K; ++i) out[i] = coeff[static_cast<std::size_t>(i)] * std::polar(1.0, freq[static_cast<std::size_t>(i)] * t);
            break;
        }
        case Kind::gaussian: {
            for (int i = 0; i < K; ++i) {
                const double s = sigma[static_cast<std::size_t>(i)];
                const double z = (x - mu[static_cast<std::size_t>(i)]) / s;
                out[i] = std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
            }
            break;
        }
        }
    }

    cplx eval_one(double x, int i) const {
        require(domain.contains(x), ErrorKind::domain, "value " + std::to_string(x) + " outside family domain");
        const auto k = static_cast<std::size_t>(i);
        switch (kind) {
        case Kind::categorical:
            return table(i, static_cast<Eigen::Index>(x));
        case Kind::fourier:
            return coeff[k] * std::polar(1.0, 2.0 * std::numbers::pi * freq[k] * (x + bias) / period);
        case Kind::gaussian: {
            const double z = (x - mu[k]) / sigma[k];
            return std::exp(-0.5 * z * z) / (sigma[k] * std::sqrt(2.0 * std::numbers::pi));
        }
        }
        return 0.0;
    }

    VectorC eval(double x) const {
        VectorC v(width());
        eval_into(x, v.data());
        return v;
    }

    // ∫ f_i(x) dx over the domain.
    VectorC integrals() const {
        const int K = width();
        VectorC out(K);
        switch (kind) {
        case Kind::categorical:
            out = table.rowwise().sum();
            break;
        case Kind::fourier:
            for (int i = 0; i < K; ++i) out(i) = freq[static_cast<std::size_t>(i)] == 0 ? period * coeff[static_cast<std::size_t>(i)] : cplx(0.0);
            break;
        case Kind::gaussian:
            out.setOnes();
            break;
        }
        return out;
    }
};

inline InputFamily categorical_family(const MatrixC& table, std::string label = "categorical") {
    InputFamily f;
    f.kind = InputFamily::Kind::categorical;
    f.label = std::move(label);
    f.domain = VarDomain::categorical(static_cast<int>(table.cols()));
    f.table = table;
    return f;
}

inline InputFamily delta_family(int v) {
    InputFamily f = categorical_family(MatrixC::Identity(v, v), "delta");
    f.orthonormal = true;
    f.learnable = false;
    return f;
}

// Unconstrained complex table with entries of scale 1/√v (baseline inputs).
inline InputFamily random_categorical(int v, int K, Rng& rng) {
    return categorical_family(random_complex(K, v, 1.0 / std::sqrt(static_cast<double>(v)), rng), "categorical");
}

// Row-blocks of one random v×v unitary; distinct blocks are mutually orthogonal.
inline std::vector<InputFamily> make_unitary_embedding_blocks(int v, const std::vector<int>& widths, std::uint64_t seed) {
    int total = 0;
    for (int k : widths) {
        require(k >= 1, ErrorKind::input, "embedding width must be >= 1");
        total += k;
    }
    require(total <= v, ErrorKind::infeasible,
            "cannot fit " + std::to_string(total) + " orthonormal functions on " + std::to_string(v) + " points");
    Rng rng(seed);
    MatrixC U = random_semi_unitary(total, v, rng);
    std::vector<InputFamily> out;
    int row = 0;
    for (int k : widths) {
        InputFamily f = categorical_family(U.middleRows(row, k), "embedding");
        f.orthonormal = true;
        out.push_back(std::move(f));
        row += k;
    }
    return out;
}

inline InputFamily make_unitary_embedding(int v, int K, std::uint64_t seed) {
    return make_unitary_embedding_blocks(v, {K}, seed).front();
}

// K odd, frequencies -K'..K', unit L² norm on [0, P).
inline InputFamily fourier_family(int K, double period, double bias = 0.0) {
    require(K >= 1 && K % 2 == 1, ErrorKind::input, "Fourier family width must be odd");
    require(period > 0, ErrorKind::input, "Fourier period must be positive");
    InputFamily f;
    f.kind = InputFamily::Kind::fourier;
    f.label = "fourier";
    f.domain = VarDomain::interval(0.0, period);
    f.period = period;
    f.bias = bias;
    const int half = K / 2;
    for (int k = -half; k <= half; ++k) {
        f.freq.push_back(k);
        f.coeff.push_back(cplx(1.0 / std::sqrt(period), 0.0));
    }
    f.orthonormal = true;
    return f;
}

inline InputFamily gaussian_family(std::vector<double> mu, std::vector<double> sigma) {
    require(mu.size() == sigma.size() && !mu.empty(), ErrorKind::input, "Gaussian family needs matching mu/sigma");
    for (double s : sigma) require(s > 0, ErrorKind::input, "Gaussian sigma must be positive");
    InputFamily f;
    f.kind = InputFamily::Kind::gaussian;
    f.label = "gaussian";
    f.domain = VarDomain::real_line();
    f.mu = std::move(mu);
    f.sigma = std::move(sigma);
    f.learnable = false;
    return f;
}

inline InputFamily conjugate_family(const InputFamily& f) {
    InputFamily g = f;
    switch (f.kind) {
    case InputFamily::Kind::categorical:
        g.table = f.table.conjugate();
        break;
    case InputFamily::Kind::fourier:
        for (std::size_t i = 0; i < g.freq.size(); ++i) {
            g.freq[i] = -f.freq[i];
            g.coeff[i] = std::conj(f.coeff[i]);
        }
        break;
    case InputFamily::Kind::gaussian:
        break;
    }
    return g;
}

// Pairwise products f_i g_j, index i*K2 + j.
inline InputFamily product_family(const InputFamily& a, const InputFamily& b) {
    require(a.squarable() && b.squarable(), ErrorKind::capability,
            "pairwise products are supported for categorical and Fourier families only");
    require(a.kind == b.kind, ErrorKind::capability, "product of different family kinds");
    require(a.domain == b.domain, ErrorKind::input, "product of families over different domains");
    const int K1 = a.width(), K2 = b.width();
    InputFamily p;
    p.kind = a.kind;
    p.label = "product";
    p.domain = a.domain;
    p.learnable = false;
    p.origin = a.label + "*" + b.label;
    if (a.kind == InputFamily::Kind::categorical) {
        p.table.resize(K1 * K2, a.table.cols());
        for (int i = 0; i < K1; ++i)
            for (int j = 0; j < K2; ++j) p.table.row(i * K2 + j) = a.table.row(i).cwiseProduct(b.table.row(j));
    } else {
        require(a.period == b.period, ErrorKind::capability, "Fourier products need equal periods");
        p.period = a.period;
        p.bias = a.bias;
        const double shift = 2.0 * std::numbers::pi * (b.bias - a.bias) / a.period;
        for (int i = 0; i < K1; ++i)
            for (int j = 0; j < K2; ++j) {
                const int mb = b.freq[static_cast<std::size_t>(j)];
                p.freq.push_back(a.freq[static_cast<std::size_t>(i)] + mb);
                p.coeff.push_back(a.coeff[static_cast<std::size_t>(i)] * b.coeff[static_cast<std::size_t>(j)] * std::polar(1.0, mb * shift));
            }
    }
    return p;
}

// G(i, j) = ∫ f_i(x) g_j(x)* dx.
inline MatrixC gram(const InputFamily& a, const InputFamily& b) {
    require(a.domain == b.domain, ErrorKind::input, "gram of families over different domains");
    require(a.kind == b.kind, ErrorKind::capability, "no closed-form gram between different family kinds");
    const int K1 = a.width(), K2 = b.width();
    MatrixC G = MatrixC::Zero(K1, K2);
    switch (a.kind) {
    case InputFamily::Kind::categorical:
        G = a.table * b.table.adjoint();
        break;
    case InputFamily::Kind::fourier: {
        require(a.period == b.period, ErrorKind::capability, "Fourier gram needs equal periods");
        const double P = a.period;
        for (int i = 0; i < K1; ++i)
            for (int j = 0; j < K2; ++j) {
                const int m = a.freq[static_cast<std::size_t>(i)];
                if (m != b.freq[static_cast<std::size_t>(j)]) continue;
                G(i, j) = P * a.coeff[static_cast<std::size_t>(i)] * std::conj(b.coeff[static_cast<std::size_t>(j)]) *
                          std::polar(1.0, 2.0 * std::numbers::pi * m * (a.bias - b.bias) / P);
            }
        break;
    }
    case InputFamily::Kind::gaussian:
        for (int i = 0; i < K1; ++i)
            for (int j = 0; j < K2; ++j) {
                const double s2 = a.sigma[static_cast<std::size_t>(i)] * a.sigma[static_cast<std::size_t>(i)] +
                                  b.sigma[static_cast<std::size_t>(j)] * b.sigma[static_cast<std::size_t>(j)];
                const double d = a.mu[static_cast<std::size_t>(i)] - b.mu[static_cast<std::size_t>(j)];
                G(i, j) = std::exp(-0.5 * d * d / s2) / std::sqrt(2.0 * std::numbers::pi * s2);
            }
        break;
    }
    return G;
}

inline double orthonormality_defect(const InputFamily& f) {
    MatrixC G = gram(f, f);
    return (G - MatrixC::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

}  // namespace sqpc
