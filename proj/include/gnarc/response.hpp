#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gnarc {

/// Map from the linear predictor to a conditional mean, with value, first
/// derivative, and a stable log-value for likelihood work.
///
/// softplus_c(x) = log(1 + exp(c x)) / c is evaluated through log1p with a
/// linear branch for large arguments; the exponential response saturates
/// (throws) beyond a documented cap so a Poisson mean can never overflow.
class ResponseFunction {
public:
    enum class Kind { identity, exponential, relu, softplus };

    /// Arguments above this cap make the exponential response error out.
    static constexpr double kExpCap = 700.0;

    static ResponseFunction identity() { return ResponseFunction(Kind::identity, 0.0); }
    static ResponseFunction exponential() { return ResponseFunction(Kind::exponential, 0.0); }
    static ResponseFunction relu() { return ResponseFunction(Kind::relu, 0.0); }
    static ResponseFunction softplus(double c = 1.0) {
        if (!(c > 0.0)) throw std::invalid_argument("softplus sharpness c must be positive");
        return ResponseFunction(Kind::softplus, c);
    }

    static ResponseFunction from_name(const std::string& name, double c = 1.0) {
        if (name == "identity") return identity();
        if (name == "exponential") return exponential();
        if (name == "relu") return relu();
        if (name == "softplus") return softplus(c);
        throw std::invalid_argument("unknown response function '" + name + "'");
    }

    Kind kind() const { return kind_; }
    double sharpness() const { return c_; }

    std::string name() const {
        switch (kind_) {
            case Kind::identity: return "identity";
            case Kind::exponential: return "exponential";
            case Kind::relu: return "relu";
            case Kind::softplus: return "softplus";
        }
        throw std::logic_error("unknown response kind");
    }

    /// Whether the response is strictly positive everywhere (valid as a
    /// Poisson conditional mean for any predictor value).
    bool strictly_positive() const {
        return kind_ == Kind::softplus || kind_ == Kind::exponential;
    }

    double value(double x) const {
        switch (kind_) {
            case Kind::identity: return x;
            case Kind::exponential:
                if (x > kExpCap)
                    throw std::domain_error("exponential response saturated: predictor " +
                                            std::to_string(x) + " exceeds cap " +
                                            std::to_string(kExpCap));
                return std::exp(x);
            case Kind::relu: return x > 0.0 ? x : 0.0;
            case Kind::softplus: {
                const double cx = c_ * x;
                if (cx > 30.0) return x + std::log1p(std::exp(-cx)) / c_;
                return std::log1p(std::exp(cx)) / c_;
            }
        }
        throw std::logic_error("unknown response kind");
    }

    double grad(double x) const {
        switch (kind_) {
            case Kind::identity: return 1.0;
            case Kind::exponential:
                if (x > kExpCap)
                    throw std::domain_error("exponential response saturated at " +
                                            std::to_string(x));
                return std::exp(x);
            case Kind::relu: return x > 0.0 ? 1.0 : 0.0;
            case Kind::softplus: {
                const double cx = c_ * x;
                if (cx >= 0.0) return 1.0 / (1.0 + std::exp(-cx));
                const double e = std::exp(cx);
                return e / (1.0 + e);
            }
        }
        throw std::logic_error("unknown response kind");
    }

    /// log g(x), stable deep into the lower tail (softplus(x) ~ exp(c x)/c
    /// as x -> -inf, so log g ~ c x - log c there).
    double log_value(double x) const {
        switch (kind_) {
            case Kind::identity:
            case Kind::relu: {
                const double v = value(x);
                if (!(v > 0.0))
                    throw std::domain_error("log of non-positive response value");
                return std::log(v);
            }
            case Kind::exponential: return x;
            case Kind::softplus: {
                const double cx = c_ * x;
                if (cx < -30.0) return cx - std::log(c_);
                return std::log(value(x));
            }
        }
        throw std::logic_error("unknown response kind");
    }

    double operator()(double x) const { return value(x); }

    /// Vectorized value; softplus uses max(x,0) + log1p(exp(-|c x|))/c,
    /// stable in both tails.
    Eigen::ArrayXd value(const Eigen::ArrayXd& x) const {
        switch (kind_) {
            case Kind::identity: return x;
            case Kind::exponential:
                if (x.size() > 0 && x.maxCoeff() > kExpCap)
                    throw std::domain_error("exponential response saturated");
                return x.exp();
            case Kind::relu: return x.max(0.0);
            case Kind::softplus:
                return x.max(0.0) + (-(c_ * x).abs()).exp().log1p() / c_;
        }
        throw std::logic_error("unknown response kind");
    }

    /// Vectorized derivative; the softplus derivative is the logistic,
    /// written as 0.5 (1 + tanh(c x / 2)).
    Eigen::ArrayXd grad(const Eigen::ArrayXd& x) const {
        switch (kind_) {
            case Kind::identity: return Eigen::ArrayXd::Ones(x.size());
            case Kind::exponential:
                if (x.size() > 0 && x.maxCoeff() > kExpCap)
                    throw std::domain_error("exponential response saturated");
                return x.exp();
            case Kind::relu: return (x > 0.0).cast<double>();
            case Kind::softplus: return 0.5 * (1.0 + (0.5 * c_ * x).tanh());
        }
        throw std::logic_error("unknown response kind");
    }

    /// Vectorized log g; the softplus branch switches to its asymptote
    /// log g(x) ~ c x - log c once c x would underflow.
    Eigen::ArrayXd log_value(const Eigen::ArrayXd& x) const {
        switch (kind_) {
            case Kind::exponential:
                if (x.size() > 0 && x.maxCoeff() > kExpCap)
                    throw std::domain_error("exponential response saturated");
                return x;
            case Kind::softplus: {
                const Eigen::ArrayXd cx = c_ * x;
                const Eigen::ArrayXd cv = cx.max(0.0) + (-cx.abs()).exp().log1p();
                return (cx < -600.0)
                    .select(cx - std::log(c_), cv.log() - std::log(c_));
            }
            default: {
                Eigen::ArrayXd out(x.size());
                for (Eigen::Index k = 0; k < x.size(); ++k) out[k] = log_value(x[k]);
                return out;
            }
        }
    }

private:
    ResponseFunction(Kind kind, double c) : kind_(kind), c_(c) {}

    Kind kind_;
    double c_;
};

}  // namespace gnarc
