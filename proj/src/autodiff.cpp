#include "autodiff.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace ttag {

int ParamStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    Tensor t;
    t.name = name;
    t.value = Mat::Zero(rows, cols);
    t.grad = Mat::Zero(rows, cols);
    t.adam_m = Mat::Zero(rows, cols);
    t.adam_v = Mat::Zero(rows, cols);
    tensors_.push_back(std::move(t));
    return int(tensors_.size()) - 1;
}

int ParamStore::add_init(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                         std::mt19937_64& rng, double scale) {
    int i = add(name, rows, cols);
    double s = scale > 0.0 ? scale : std::sqrt(6.0 / double(rows + cols));
    std::uniform_real_distribution<double> dist(-s, s);
    Mat& v = tensors_[size_t(i)].value;
    for (Eigen::Index r = 0; r < v.rows(); ++r)
        for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = dist(rng);
    return i;
}

int ParamStore::find(const std::string& name) const {
    for (size_t i = 0; i < tensors_.size(); ++i)
        if (tensors_[i].name == name) return int(i);
    return -1;
}

void ParamStore::zero_grads() {
    for (auto& t : tensors_) t.grad.setZero();
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps,
                           double weight_decay) {
    ++adam_t_;
    double bc1 = 1.0 - std::pow(beta1, double(adam_t_));
    double bc2 = 1.0 - std::pow(beta2, double(adam_t_));
    for (auto& t : tensors_) {
        t.adam_m = beta1 * t.adam_m + (1.0 - beta1) * t.grad;
        t.adam_v = beta2 * t.adam_v + (1.0 - beta2) * t.grad.cwiseProduct(t.grad);
        Mat m_hat = t.adam_m / bc1;
        Mat v_hat = t.adam_v / bc2;
        if (weight_decay > 0.0) t.value *= 1.0 - lr * weight_decay;
        t.value -=
            lr * m_hat.cwiseQuotient(v_hat.cwiseSqrt() +
                                     Mat::Constant(t.value.rows(), t.value.cols(), eps));
    }
}

size_t ParamStore::num_scalars() const {
    size_t n = 0;
    for (const auto& t : tensors_) n += size_t(t.value.size());
    return n;
}

void ParamStore::save_tensors(std::ostream& out) const {
    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(uint32_t(tensors_.size()));
    for (const auto& t : tensors_) {
        put_u32(uint32_t(t.value.rows()));
        put_u32(uint32_t(t.value.cols()));
        for (Eigen::Index r = 0; r < t.value.rows(); ++r)
            for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
                float f = float(t.value(r, c));
                out.write(reinterpret_cast<const char*>(&f), 4);
            }
    }
}

void ParamStore::load_tensors(std::istream& in) {
    auto get_u32 = [&]() {
        uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    uint32_t n = get_u32();
    if (n != tensors_.size()) throw Error("checkpoint tensor count mismatch");
    for (auto& t : tensors_) {
        uint32_t rows = get_u32(), cols = get_u32();
        if (Eigen::Index(rows) != t.value.rows() || Eigen::Index(cols) != t.value.cols())
            throw Error("checkpoint shape mismatch for tensor " + t.name);
        for (Eigen::Index r = 0; r < t.value.rows(); ++r)
            for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
                float f = 0;
                in.read(reinterpret_cast<char*>(&f), 4);
                t.value(r, c) = double(f);
            }
    }
    if (!in) throw Error("truncated checkpoint payload");
}

int Tape::push(Vec val) {
    Node n;
    n.val = std::move(val);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Tape::constant(Vec v) { return push(std::move(v)); }

int Tape::affine(int w_param, int b_param, int x) {
    const Mat& W = (*ps_)[w_param].value;
    const Mat& b = (*ps_)[b_param].value;
    int y = push(W * nodes_[size_t(x)].val + b.col(0));
    nodes_[size_t(y)].back = [this, w_param, b_param, x, y] {
        const Vec& gy = nodes_[size_t(y)].grad;
        (*ps_)[w_param].grad.noalias() += gy * nodes_[size_t(x)].val.transpose();
        (*ps_)[b_param].grad.col(0) += gy;
        nodes_[size_t(x)].grad.noalias() += (*ps_)[w_param].value.transpose() * gy;
    };
    return y;
}

int Tape::matvec(int w_param, int x) {
    const Mat& W = (*ps_)[w_param].value;
    int y = push(W * nodes_[size_t(x)].val);
    nodes_[size_t(y)].back = [this, w_param, x, y] {
        const Vec& gy = nodes_[size_t(y)].grad;
        (*ps_)[w_param].grad.noalias() += gy * nodes_[size_t(x)].val.transpose();
        nodes_[size_t(x)].grad.noalias() += (*ps_)[w_param].value.transpose() * gy;
    };
    return y;
}

int Tape::add(int a, int b) {
    int y = push(nodes_[size_t(a)].val + nodes_[size_t(b)].val);
    nodes_[size_t(y)].back = [this, a, b, y] {
        nodes_[size_t(a)].grad += nodes_[size_t(y)].grad;
        nodes_[size_t(b)].grad += nodes_[size_t(y)].grad;
    };
    return y;
}

int Tape::mean(std::vector<int> xs) {
    if (xs.empty()) throw Error("mean over empty list");
    Vec v = nodes_[size_t(xs[0])].val;
    for (size_t i = 1; i < xs.size(); ++i) v += nodes_[size_t(xs[i])].val;
    v /= double(xs.size());
    int y = push(std::move(v));
    nodes_[size_t(y)].back = [this, xs = std::move(xs), y] {
        Vec g = nodes_[size_t(y)].grad / double(xs.size());
        for (int x : xs) nodes_[size_t(x)].grad += g;
    };
    return y;
}

int Tape::relu(int x) {
    int y = push(nodes_[size_t(x)].val.cwiseMax(0.0));
    nodes_[size_t(y)].back = [this, x, y] {
        const Vec& xv = nodes_[size_t(x)].val;
        const Vec& gy = nodes_[size_t(y)].grad;
        // Midpoint subgradient at the kink: inputs pinned exactly at zero
        // (structurally common with all-zero hidden states) then agree with
        // central finite differences.
        for (Eigen::Index i = 0; i < xv.size(); ++i)
            if (xv[i] > 0.0)
                nodes_[size_t(x)].grad[i] += gy[i];
            else if (xv[i] == 0.0)
                nodes_[size_t(x)].grad[i] += 0.5 * gy[i];
    };
    return y;
}

int Tape::leaky_relu(int x, double alpha) {
    const Vec& xv = nodes_[size_t(x)].val;
    Vec out = xv;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        if (out[i] < 0.0) out[i] *= alpha;
    int y = push(std::move(out));
    nodes_[size_t(y)].back = [this, x, y, alpha] {
        const Vec& xv2 = nodes_[size_t(x)].val;
        const Vec& gy = nodes_[size_t(y)].grad;
        for (Eigen::Index i = 0; i < xv2.size(); ++i) {
            double slope = xv2[i] > 0.0 ? 1.0 : xv2[i] < 0.0 ? alpha : (1.0 + alpha) / 2;
            nodes_[size_t(x)].grad[i] += slope * gy[i];
        }
    };
    return y;
}

int Tape::dot(int a, int b) {
    Vec v(1);
    v[0] = nodes_[size_t(a)].val.dot(nodes_[size_t(b)].val);
    int y = push(std::move(v));
    nodes_[size_t(y)].back = [this, a, b, y] {
        double g = nodes_[size_t(y)].grad[0];
        nodes_[size_t(a)].grad += g * nodes_[size_t(b)].val;
        nodes_[size_t(b)].grad += g * nodes_[size_t(a)].val;
    };
    return y;
}

int Tape::param_dot(int a_param, int x) {
    Vec v(1);
    v[0] = (*ps_)[a_param].value.col(0).dot(nodes_[size_t(x)].val);
    int y = push(std::move(v));
    nodes_[size_t(y)].back = [this, a_param, x, y] {
        double g = nodes_[size_t(y)].grad[0];
        (*ps_)[a_param].grad.col(0) += g * nodes_[size_t(x)].val;
        nodes_[size_t(x)].grad += g * (*ps_)[a_param].value.col(0);
    };
    return y;
}

int Tape::token_mean(int table_param, const std::vector<uint32_t>& ids, Eigen::Index dim) {
    const Mat& table = (*ps_)[table_param].value;
    Vec v = Vec::Zero(dim);
    for (uint32_t id : ids) {
        if (Eigen::Index(id) >= table.rows()) throw Error("token id out of vocabulary range");
        v += table.row(Eigen::Index(id)).transpose();
    }
    if (!ids.empty()) v /= double(ids.size());
    int y = push(std::move(v));
    if (!ids.empty()) {
        nodes_[size_t(y)].back = [this, table_param, ids, y] {
            Vec g = nodes_[size_t(y)].grad / double(ids.size());
            for (uint32_t id : ids)
                (*ps_)[table_param].grad.row(Eigen::Index(id)) += g.transpose();
        };
    }
    return y;
}

int Tape::attention(const std::vector<int>& scores, const std::vector<int>& msgs) {
    if (scores.size() != msgs.size() || scores.empty())
        throw Error("attention: mismatched or empty inputs");
    size_t n = scores.size();
    double mx = -std::numeric_limits<double>::infinity();
    for (int s : scores) mx = std::max(mx, nodes_[size_t(s)].val[0]);
    std::vector<double> alpha(n);
    double z = 0.0;
    for (size_t i = 0; i < n; ++i) {
        alpha[i] = std::exp(nodes_[size_t(scores[i])].val[0] - mx);
        z += alpha[i];
    }
    for (auto& a : alpha) a /= z;
    Vec v = Vec::Zero(nodes_[size_t(msgs[0])].val.size());
    for (size_t i = 0; i < n; ++i) v += alpha[i] * nodes_[size_t(msgs[i])].val;
    int y = push(std::move(v));
    nodes_[size_t(y)].back = [this, scores, msgs, alpha = std::move(alpha), y] {
        const Vec& gy = nodes_[size_t(y)].grad;
        size_t n2 = scores.size();
        std::vector<double> c(n2);
        double csum = 0.0;
        for (size_t i = 0; i < n2; ++i) {
            c[i] = nodes_[size_t(msgs[i])].val.dot(gy);
            csum += alpha[i] * c[i];
        }
        for (size_t i = 0; i < n2; ++i) {
            nodes_[size_t(msgs[i])].grad += alpha[i] * gy;
            nodes_[size_t(scores[i])].grad[0] += alpha[i] * (c[i] - csum);
        }
    };
    return y;
}

int Tape::normalize(int x) {
    const Vec& xv = nodes_[size_t(x)].val;
    double n = xv.norm();
    int y;
    if (n < 1e-12) {
        y = push(Vec::Zero(xv.size()));
        nodes_[size_t(y)].aux = n;
        return y;  // zero stays zero, no gradient flow
    }
    y = push(xv / n);
    nodes_[size_t(y)].aux = n;
    nodes_[size_t(y)].back = [this, x, y, n] {
        const Vec& yv = nodes_[size_t(y)].val;
        const Vec& gy = nodes_[size_t(y)].grad;
        nodes_[size_t(x)].grad += (gy - yv * yv.dot(gy)) / n;
    };
    return y;
}

double Tape::input_norm(int normalize_id) const { return nodes_[size_t(normalize_id)].aux; }

void Tape::backward(int output, const Vec& out_grad) {
    backward_multi({{output, out_grad}});
}

void Tape::backward_multi(const std::vector<std::pair<int, Vec>>& seeds) {
    for (auto& n : nodes_) n.grad = Vec::Zero(n.val.size());
    for (const auto& [id, g] : seeds) nodes_[size_t(id)].grad += g;
    for (size_t i = nodes_.size(); i-- > 0;)
        if (nodes_[i].back) nodes_[i].back();
}

}  // namespace ttag
