#pragma once

// Sum-of-products operators on a tensor-product space.  A state over degrees
// of freedom (d_0, ..., d_{f-1}) is stored flat in C order, DOF 0 slowest.
// Every operator is a sum of terms c * h_0 x h_1 x ... where each factor acts
// on a single DOF; factors for untouched DOFs are implicit identities.

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/common.hpp"
#include "qtraj/dvr.hpp"

namespace qtraj {

using RowMajorXcd = Eigen::Matrix<cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out = (I x ... x M x ... x I) in, with M acting on the given axis.
// Views the flat vector as blocks of shape (dims[axis] x stride) and hits
// each block with one GEMM; the first and last axes collapse to a single one.
inline void apply_axis(const std::vector<int>& dims, int axis, const MatrixXcd& m,
                       const VectorXcd& in, VectorXcd& out) {
    const int d = dims[axis];
    std::ptrdiff_t stride = 1, nblk = 1;
    for (std::size_t k = std::size_t(axis) + 1; k < dims.size(); ++k) stride *= dims[k];
    for (int k = 0; k < axis; ++k) nblk *= dims[k];
    out.resize(in.size());

    if (stride == 1) {
        Eigen::Map<const RowMajorXcd> vi(in.data(), nblk, d);
        Eigen::Map<RowMajorXcd> vo(out.data(), nblk, d);
        vo.noalias() = vi * m.transpose();
        return;
    }
    const std::ptrdiff_t blk = d * stride;
    for (std::ptrdiff_t b = 0; b < nblk; ++b) {
        Eigen::Map<const RowMajorXcd> vi(in.data() + b * blk, d, stride);
        Eigen::Map<RowMajorXcd> vo(out.data() + b * blk, d, stride);
        vo.noalias() = m * vi;
    }
}

struct ProductTerm {
    cx coeff = 1.0;
    std::vector<OneBodyOperator> factors;  // strictly ascending dof indices
};

class SumProdOperator {
  public:
    SumProdOperator() = default;
    explicit SumProdOperator(std::vector<int> dims) : dims_(std::move(dims)) {}

    const std::vector<int>& dims() const { return dims_; }
    const std::vector<ProductTerm>& terms() const { return terms_; }
    std::ptrdiff_t dim() const { return total_dim(dims_); }

    void add_term(ProductTerm t) { terms_.push_back(std::move(t)); }

    void add_term(cx coeff, std::vector<OneBodyOperator> factors) {
        std::sort(factors.begin(), factors.end(),
                  [](const OneBodyOperator& a, const OneBodyOperator& b) { return a.dof < b.dof; });
        terms_.push_back({coeff, std::move(factors)});
    }

    void validate() const {
        for (const auto& t : terms_) {
            int prev = -1;
            for (const auto& f : t.factors) {
                if (f.dof <= prev) throw ConfigError("operator term: factor dofs must be strictly ascending");
                if (f.dof >= int(dims_.size())) throw ConfigError("operator term: dof index out of range");
                if (f.matrix.rows() != dims_[f.dof] || f.matrix.cols() != dims_[f.dof])
                    throw ConfigError("operator term: factor shape does not match dof dimension");
                prev = f.dof;
            }
        }
    }

    // out += O in, using two scratch buffers of the same size.
    void apply_add(const VectorXcd& in, VectorXcd& out, VectorXcd& b1, VectorXcd& b2) const {
        for (const auto& t : terms_) {
            if (t.factors.empty()) {
                out += t.coeff * in;
                continue;
            }
            const VectorXcd* src = &in;
            VectorXcd* dst = &b1;
            VectorXcd* alt = &b2;
            for (const auto& f : t.factors) {
                apply_axis(dims_, f.dof, f.matrix, *src, *dst);
                src = dst;
                std::swap(dst, alt);
            }
            out.noalias() += t.coeff * (*src);
        }
    }

    VectorXcd apply(const VectorXcd& in) const {
        VectorXcd out = VectorXcd::Zero(in.size());
        VectorXcd b1(in.size()), b2(in.size());
        apply_add(in, out, b1, b2);
        return out;
    }

    cx expectation(const VectorXcd& v) const { return v.dot(apply(v)); }

    SumProdOperator adjoint() const {
        SumProdOperator r(dims_);
        for (const auto& t : terms_) {
            ProductTerm nt;
            nt.coeff = std::conj(t.coeff);
            for (const auto& f : t.factors)
                nt.factors.push_back({f.dof, f.matrix.adjoint(), f.label + "^+"});
            r.terms_.push_back(std::move(nt));
        }
        return r;
    }

    SumProdOperator scaled(cx s) const {
        SumProdOperator r = *this;
        for (auto& t : r.terms_) t.coeff *= s;
        return r;
    }

    SumProdOperator& operator+=(const SumProdOperator& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        return *this;
    }

    // Operator product; same-DOF factors compose left-to-right, disjoint DOFs
    // commute.  Term count multiplies, so reserve this for small operators.
    friend SumProdOperator operator*(const SumProdOperator& a, const SumProdOperator& b) {
        SumProdOperator r(a.dims_);
        for (const auto& ta : a.terms_)
            for (const auto& tb : b.terms_) {
                ProductTerm nt;
                nt.coeff = ta.coeff * tb.coeff;
                auto ia = ta.factors.begin();
                auto ib = tb.factors.begin();
                while (ia != ta.factors.end() || ib != tb.factors.end()) {
                    if (ib == tb.factors.end() || (ia != ta.factors.end() && ia->dof < ib->dof)) {
                        nt.factors.push_back(*ia++);
                    } else if (ia == ta.factors.end() || ib->dof < ia->dof) {
                        nt.factors.push_back(*ib++);
                    } else {
                        nt.factors.push_back(
                            {ia->dof, ia->matrix * ib->matrix, ia->label + "*" + ib->label});
                        ++ia, ++ib;
                    }
                }
                r.terms_.push_back(std::move(nt));
            }
        return r;
    }

    // Merge terms whose factor lists are bitwise identical; trims the copies
    // of number operators that pile up when building effective Hamiltonians.
    void consolidate() {
        std::vector<ProductTerm> merged;
        for (auto& t : terms_) {
            bool found = false;
            for (auto& m : merged) {
                if (m.factors.size() != t.factors.size()) continue;
                bool same = true;
                for (std::size_t i = 0; i < t.factors.size() && same; ++i) {
                    same = m.factors[i].dof == t.factors[i].dof &&
                           m.factors[i].matrix.rows() == t.factors[i].matrix.rows() &&
                           (m.factors[i].matrix - t.factors[i].matrix).squaredNorm() == 0.0;
                }
                if (same) {
                    m.coeff += t.coeff;
                    found = true;
                    break;
                }
            }
            if (!found) merged.push_back(std::move(t));
        }
        terms_ = std::move(merged);
    }

    MatrixXcd dense() const {
        const std::ptrdiff_t d = dim();
        if (d > 8192) throw ConfigError("dense(): basis too large for explicit matrix");
        MatrixXcd acc = MatrixXcd::Zero(d, d);
        for (const auto& t : terms_) {
            MatrixXcd m = MatrixXcd::Constant(1, 1, t.coeff);
            std::size_t fi = 0;
            for (std::size_t k = 0; k < dims_.size(); ++k) {
                if (fi < t.factors.size() && t.factors[fi].dof == int(k))
                    m = kron(m, t.factors[fi++].matrix);
                else
                    m = kron(m, MatrixXcd::Identity(dims_[k], dims_[k]));
            }
            acc += m;
        }
        return acc;
    }

    static MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
        MatrixXcd r(a.rows() * b.rows(), a.cols() * b.cols());
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < a.cols(); ++j)
                r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        return r;
    }

  private:
    std::vector<int> dims_;
    std::vector<ProductTerm> terms_;
};

// Flattened tensor product of per-DOF vectors, DOF 0 slowest.
inline VectorXcd product_state(const std::vector<VectorXcd>& parts) {
    VectorXcd v = VectorXcd::Ones(1);
    for (const auto& p : parts) {
        VectorXcd next(v.size() * p.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            next.segment(i * p.size(), p.size()) = v(i) * p;
        v = std::move(next);
    }
    return v;
}

// Population of the highest retained basis state of one DOF; used to monitor
// truncation leakage.
inline double top_level_population(const std::vector<int>& dims, int dof, const VectorXcd& v) {
    const int d = dims[dof];
    std::ptrdiff_t stride = 1, nblk = 1;
    for (std::size_t k = std::size_t(dof) + 1; k < dims.size(); ++k) stride *= dims[k];
    for (int k = 0; k < dof; ++k) nblk *= dims[k];
    double p = 0.0;
    for (std::ptrdiff_t b = 0; b < nblk; ++b)
        p += v.segment(b * d * stride + (d - 1) * stride, stride).squaredNorm();
    return p;
}

}  // namespace qtraj
