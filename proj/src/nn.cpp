#include "rainlab/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "rainlab/error.hpp"

namespace rainlab::ad {

namespace {

void init_uniform(Var& weight, Var& bias, std::size_t fan_in, Rng& rng, double slope) {
    const double bound = std::sqrt(6.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
    for (double& v : weight.mutable_value().storage()) v = rng.uniform(-bound, bound);
    bias.mutable_value().fill(0.0);
}

}  // namespace

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : weight(parameter(Tensor({out_channels, in_channels, kernel}))), bias(parameter(Tensor({out_channels}))) {
    if (kernel % 2 == 0) throw ShapeError("Conv1d: kernel size must be odd");
}

void Conv1d::init_fan_in(Rng& rng, double slope) {
    init_uniform(weight, bias, weight.shape()[1] * weight.shape()[2], rng, slope);
}

void Conv1d::init_zero() {
    weight.mutable_value().fill(0.0);
    bias.mutable_value().fill(0.0);
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h, std::size_t kernel_w)
    : weight(parameter(Tensor({out_channels, in_channels, kernel_h, kernel_w}))),
      bias(parameter(Tensor({out_channels}))) {
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0) throw ShapeError("Conv2d: kernel sides must be odd");
}

void Conv2d::init_fan_in(Rng& rng, double slope) {
    const Shape& s = weight.shape();
    init_uniform(weight, bias, s[1] * s[2] * s[3], rng, slope);
}

void Conv2d::init_zero() {
    weight.mutable_value().fill(0.0);
    bias.mutable_value().fill(0.0);
}

std::size_t count_parameters(const std::vector<NamedParameter>& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.var.value().size();
    return n;
}

Adam::Adam(std::vector<Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.shape(), 0.0);
        v_.emplace_back(p.shape(), 0.0);
    }
}

void Adam::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].grad().size() != params_[i].value().size()) {
            throw Error("adam: parameter " + std::to_string(i) + " has no gradient");
        }
    }
    ++step_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& theta = params_[i].mutable_value();
        const Tensor& g = params_[i].grad();
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            theta[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
        check_finite(theta, "adam update");
    }
    zero_grad();
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

namespace {

constexpr char kMagic[8] = {'R', 'L', 'C', 'K', 'P', 'T', 0, 0};
constexpr std::uint32_t kVersion = 1;

template <class U>
void put_le(std::ostream& os, U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
    unsigned char b[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(U))) throw IoError("checkpoint: truncated file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedParameter>& params) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint '" + path.string() + "'");
    os.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(os, kVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const Shape& s = p.var.shape();
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
        for (std::size_t d : s) put_le<std::uint64_t>(os, d);
        for (double v : p.var.value().data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) throw IoError("error writing checkpoint '" + path.string() + "'");
}

void load_checkpoint(const std::filesystem::path& path, const std::vector<NamedParameter>& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read checkpoint '" + path.string() + "'");
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw IoError("'" + path.string() + "' is not a checkpoint file");
    }
    if (get_le<std::uint32_t>(is) != kVersion) throw IoError("unsupported checkpoint version");
    const auto count = get_le<std::uint32_t>(is);
    std::map<std::string, Tensor> blocks;
    for (std::uint32_t b = 0; b < count; ++b) {
        const auto len = get_le<std::uint32_t>(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw IoError("checkpoint: truncated file");
        const auto rank = get_le<std::uint32_t>(is);
        Shape s(rank);
        for (auto& d : s) d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
        Tensor t(s);
        for (double& v : t.storage()) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
        blocks.emplace(std::move(name), std::move(t));
    }
    for (const auto& p : params) {
        auto it = blocks.find(p.name);
        if (it == blocks.end()) throw DataError("checkpoint has no parameter '" + p.name + "'");
        if (it->second.shape() != p.var.shape()) {
            throw ShapeError("checkpoint parameter '" + p.name + "' has shape " + shape_str(it->second.shape()) +
                             ", expected " + shape_str(p.var.shape()));
        }
        Var v = p.var;
        v.mutable_value() = it->second;
    }
}

}  // namespace rainlab::ad
