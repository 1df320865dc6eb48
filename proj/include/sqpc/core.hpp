#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sqpc {

using cplx = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;
using MatrixR = Eigen::MatrixXd;
using VectorR = Eigen::VectorXd;

// Numerical tolerances shared by the checkers.
inline constexpr double tau_orth = 1e-9;
inline constexpr double tau_unit = 1e-9;
inline constexpr double min_weight_modulus = 1e-15;
inline constexpr double log_floor = 1e-300;

enum class ErrorKind {
    input,
    domain,
    precondition,
    property,
    resource,
    capability,
    infeasible,
    numerical,
    unsupported
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::input: return "input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::property: return "property";
    case ErrorKind::resource: return "resource";
    case ErrorKind::capability: return "capability";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::unsupported: return "unsupported";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + " error: " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

// Dynamic bitset over variable indices.
class VarSet {
public:
    VarSet() = default;

    static VarSet single(int v) {
        VarSet s;
        s.insert(v);
        return s;
    }
    static VarSet range(int lo, int hi) {
        VarSet s;
        for (int v = lo; v < hi; ++v) s.insert(v);
        return s;
    }
    static VarSet of(std::initializer_list<int> vs) {
        VarSet s;
        for (int v : vs) s.insert(v);
        return s;
    }
    template <class It>
    static VarSet of(It first, It last) {
        VarSet s;
        for (; first != last; ++first) s.insert(*first);
        return s;
    }

    void insert(int v) {
        std::size_t w = static_cast<std::size_t>(v) / 64;
        if (words_.size() <= w) words_.resize(w + 1, 0);
        words_[w] |= (std::uint64_t{1} << (v % 64));
    }
    void erase(int v) {
        std::size_t w = static_cast<std::size_t>(v) / 64;
        if (w < words_.size()) words_[w] &= ~(std::uint64_t{1} << (v % 64));
        trim();
    }
    bool contains(int v) const {
        std::size_t w = static_cast<std::size_t>(v) / 64;
        return w < words_.size() && (words_[w] >> (v % 64)) & 1u;
    }
    bool empty() const { return words_.empty(); }
    int size() const {
        int n = 0;
        for (auto w : words_) n += std::popcount(w);
        return n;
    }

    VarSet operator|(const VarSet& o) const {
        VarSet r;
        r.words_.resize(std::max(words_.size(), o.words_.size()), 0);
        for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] = word(i) | o.word(i);
        r.trim();
        return r;
    }
    VarSet operator&(const VarSet& o) const {
        VarSet r;
        r.words_.resize(std::min(words_.size(), o.words_.size()), 0);
        for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] = word(i) & o.word(i);
        r.trim();
        return r;
    }
    VarSet operator-(const VarSet& o) const {
        VarSet r = *this;
        for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] &= ~o.word(i);
        r.trim();
        return r;
    }
    VarSet& operator|=(const VarSet& o) { return *this = *this | o; }

    bool intersects(const VarSet& o) const {
        std::size_t n = std::min(words_.size(), o.words_.size());
        for (std::size_t i = 0; i < n; ++i)
            if (words_[i] & o.words_[i]) return true;
        return false;
    }
    bool subset_of(const VarSet& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.word(i)) return false;
        return true;
    }
    bool operator==(const VarSet& o) const { return words_ == o.words_; }
    bool operator!=(const VarSet& o) const { return !(*this == o); }
    bool operator<(const VarSet& o) const {
        if (words_.size() != o.words_.size()) return words_.size() < o.words_.size();
        for (std::size_t i = words_.size(); i-- > 0;)
            if (words_[i] != o.words_[i]) return words_[i] < o.words_[i];
        return false;
    }

    std::vector<int> to_vector() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            std::uint64_t w = words_[i];
            while (w) {
                int b = std::countr_zero(w);
                out.push_back(static_cast<int>(i * 64) + b);
                w &= w - 1;
            }
        }
        return out;
    }
    int first() const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i]) return static_cast<int>(i * 64) + std::countr_zero(words_[i]);
        return -1;
    }

    std::size_t hash() const {
        std::size_t h = 1469598103934665603ull;
        for (auto w : words_) h = (h ^ w) * 1099511628211ull;
        return h;
    }

    std::string str() const {
        std::string s = "{";
        bool first_item = true;
        for (int v : to_vector()) {
            if (!first_item) s += ",";
            s += std::to_string(v);
            first_item = false;
        }
        return s + "}";
    }

private:
    std::uint64_t word(std::size_t i) const { return i < words_.size() ? words_[i] : 0; }
    void trim() {
        while (!words_.empty() && words_.back() == 0) words_.pop_back();
    }
    std::vector<std::uint64_t> words_;
};

struct VarSetHash {
    std::size_t operator()(const VarSet& s) const { return s.hash(); }
};

struct VarDomain {
    enum class Kind { categorical, interval, real_line };
    Kind kind = Kind::categorical;
    int cardinality = 2;
    double lo = 0.0;
    double hi = 1.0;

    static VarDomain categorical(int v) {
        require(v >= 1, ErrorKind::input, "categorical cardinality must be >= 1");
        VarDomain d;
        d.kind = Kind::categorical;
        d.cardinality = v;
        return d;
    }
    static VarDomain interval(double lo, double hi) {
        require(lo < hi, ErrorKind::input, "interval domain needs lo < hi");
        VarDomain d;
        d.kind = Kind::interval;
        d.lo = lo;
        d.hi = hi;
        d.cardinality = 0;
        return d;
    }
    static VarDomain real_line() {
        VarDomain d;
        d.kind = Kind::real_line;
        d.cardinality = 0;
        return d;
    }

    bool is_categorical() const { return kind == Kind::categorical; }

    bool contains(double x) const {
        switch (kind) {
        case Kind::categorical:
            return x >= 0 && x < cardinality && std::floor(x) == x;
        case Kind::interval:
            return x >= lo && x <= hi;
        case Kind::real_line:
            return std::isfinite(x);
        }
        return false;
    }

    bool operator==(const VarDomain& o) const {
        if (kind != o.kind) return false;
        if (kind == Kind::categorical) return cardinality == o.cardinality;
        if (kind == Kind::interval) return lo == o.lo && hi == o.hi;
        return true;
    }
};

// A (partial) assignment: one double per variable, NaN marks a missing value.
using Assignment = std::vector<double>;

inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

inline void check_value(const std::vector<VarDomain>& domains, int var, double x) {
    require(!is_missing(x), ErrorKind::input, "assignment is missing variable " + std::to_string(var));
    require(domains[static_cast<std::size_t>(var)].contains(x), ErrorKind::domain,
            "value " + std::to_string(x) + " outside domain of variable " + std::to_string(var));
}

// Pairwise (tree) summation in fixed order.
template <class T>
T pairwise_sum(const std::vector<T>& xs) {
    if (xs.empty()) return T{};
    std::vector<T> cur = xs;
    while (cur.size() > 1) {
        std::vector<T> next;
        next.reserve((cur.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(cur[i] + cur[i + 1]);
        if (cur.size() % 2) next.push_back(cur.back());
        cur.swap(next);
    }
    return cur[0];
}

inline double rel_err(double a, double b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}
inline double rel_err(cplx a, cplx b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace sqpc
