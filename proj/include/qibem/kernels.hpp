#pragma once

// Splitting of the Laplace kernel log|F(s) - F(t)| = K1(s, t) + K2(s, t) with
// K2 = log delta(s, t) carrying the singularity, and the double-layer kernel.

#include "qibem/curve.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace qibem {

enum class DomainKind { open_arc, closed_curve };

/// |s - t| for open arcs, |s - t| |(s - t)^2 - gamma^2| / gamma^2 for closed curves.
inline double delta(double s, double t, DomainKind kind, double gamma) {
    const double d = s - t;
    if (kind == DomainKind::open_arc) return std::abs(d);
    return std::abs(d) * std::abs(d * d - gamma * gamma) / (gamma * gamma);
}

/// log delta(s, t); the closed form is evaluated as a sum of shifted logarithms.
inline double k2(double s, double t, DomainKind kind, double gamma) {
    const double d = s - t;
    if (kind == DomainKind::open_arc) {
        if (d == 0.0) throw std::domain_error("k2: singular point");
        return std::log(std::abs(d));
    }
    const double a = std::abs(d), b = std::abs(d - gamma), c = std::abs(d + gamma);
    if (a == 0.0 || b == 0.0 || c == 0.0) throw std::domain_error("k2: singular point");
    return std::log(a) + std::log(b) + std::log(c) - 2.0 * std::log(gamma);
}

class KernelSplit {
public:
    explicit KernelSplit(std::shared_ptr<const CurveGeometry> geometry, double patch_scale = 1e-6)
        : geom_(std::move(geometry)) {
        if (!geom_) throw std::invalid_argument("KernelSplit: null geometry");
        kind_ = geom_->closed() ? DomainKind::closed_curve : DomainKind::open_arc;
        gamma_ = geom_->gamma();
        eps_ = patch_scale * gamma_;
        orient_ = geom_->closed() && geom_->signed_area() < 0.0 ? -1.0 : 1.0;
    }

    const CurveGeometry& geometry() const { return *geom_; }
    std::shared_ptr<const CurveGeometry> geometry_ptr() const { return geom_; }
    DomainKind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double patch_radius() const { return eps_; }
    double orientation() const { return orient_; }

    double delta(double s, double t) const { return qibem::delta(s, t, kind_, gamma_); }
    double k2(double s, double t) const { return qibem::k2(s, t, kind_, gamma_); }

    double k1(double s, double t) const {
        const double d = s - t;
        const Point f1 = geom_->eval(t, 1);
        const double J2 = f1.squaredNorm();
        if (std::abs(d) < eps_) return 0.5 * std::log(J2) + curvature_term(t, f1, J2) * d;
        if (kind_ == DomainKind::closed_curve) {
            const double sigma = d > 0 ? 1.0 : -1.0;
            const double e = d - sigma * gamma_;
            if (std::abs(e) < eps_)
                return 0.5 * std::log(J2) - std::log(2.0) + (curvature_term(t, f1, J2) - sigma * 1.5 / gamma_) * e;
        }
        return 0.5 * std::log((geom_->eval(s) - geom_->eval(t)).squaredNorm()) - std::log(delta(s, t));
    }

    /// Partial derivative of K1 with respect to t.
    double k1_dt(double s, double t) const {
        const double d = s - t;
        const Point f1 = geom_->eval(t, 1);
        const double J2 = f1.squaredNorm();
        if (std::abs(d) < eps_) return curvature_term(t, f1, J2);
        double image = 0.0;
        if (kind_ == DomainKind::closed_curve) {
            const double sigma = d > 0 ? 1.0 : -1.0;
            if (std::abs(d - sigma * gamma_) < eps_) return curvature_term(t, f1, J2) + sigma * 1.5 / gamma_;
            image = 1.0 / (d - gamma_) + 1.0 / (d + gamma_);
        }
        const Point df = geom_->eval(s) - geom_->eval(t);
        return -df.dot(f1) / df.squaredNorm() + 1.0 / d + image;
    }

    /// Double-layer kernel (normal derivative of log|F(s) - F(t)| in t) times J(t).
    double dlp(double s, double t) const {
        const double d = s - t;
        const Point f1 = geom_->eval(t, 1);
        bool diagonal = std::abs(d) < eps_;
        if (kind_ == DomainKind::closed_curve) diagonal = diagonal || std::abs(std::abs(d) - gamma_) < eps_;
        if (diagonal) {
            const Point f2 = geom_->eval(t, 2);
            return orient_ * (f1.x() * f2.y() - f1.y() * f2.x()) / (2.0 * f1.squaredNorm());
        }
        const Point df = geom_->eval(t) - geom_->eval(s);
        return orient_ * (df.x() * f1.y() - df.y() * f1.x()) / df.squaredNorm();
    }

private:
    // (F' . F'') / (2 J^2), the first-order coefficient of K1 near the diagonal.
    double curvature_term(double t, const Point& f1, double J2) const {
        return f1.dot(geom_->eval(t, 2)) / (2.0 * J2);
    }

    std::shared_ptr<const CurveGeometry> geom_;
    DomainKind kind_;
    double gamma_, eps_, orient_;
};

} // namespace qibem
