#include "tempcal/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "tempcal/linreg_known.hpp"

namespace tempcal {

using nlohmann::json;

double NoiseLaw::variance() const {
    switch (kind) {
        case NoiseKind::gaussian: return sigma2;
        case NoiseKind::gmm: return p * delta2 + (1.0 - p) * sigma2;
        case NoiseKind::uniform: return half_width * half_width / 3.0;
        case NoiseKind::none: return 0.0;
    }
    return 0.0;
}

void NoiseLaw::validate() const {
    switch (kind) {
        case NoiseKind::gaussian:
            if (!(sigma2 >= 0.0)) throw ConfigError("gaussian noise needs sigma2 >= 0");
            break;
        case NoiseKind::gmm:
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("GMM noise needs 0 <= p <= 1");
            if (!(delta2 >= 0.0 && sigma2 >= 0.0)) throw ConfigError("GMM noise variances must be >= 0");
            if (delta2 > sigma2) throw ConfigError("GMM noise needs delta2 <= sigma2");
            break;
        case NoiseKind::uniform:
            if (!(half_width > 0.0)) throw ConfigError("uniform noise needs half_width > 0");
            break;
        case NoiseKind::none: break;
    }
}

double eval_poly_function(PolyFunction f, double zeta) {
    switch (f) {
        case PolyFunction::parabola: return zeta * zeta + 5.0;
        case PolyFunction::exp: return std::exp(zeta);
        case PolyFunction::none: break;
    }
    throw ConfigError("polynomial setting needs a true function");
}

void GroundTruth::validate() const {
    if (d < 1) throw ConfigError("ground truth needs d >= 1");
    noise.validate();
    if (setting == Setting::polynomial) {
        if (f == PolyFunction::none) throw ConfigError("polynomial setting needs a true function");
    } else if (theta_star.size() != d) {
        throw ConfigError("theta_star length does not match d");
    }
    if ((setting == Setting::logistic) != (kind == DataKind::binary))
        throw ConfigError("only the logistic setting produces binary data");
}

VectorXd draw_theta_star(Index d, std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::theta_star));
    return standard_normal_vector(d, rng);
}

namespace {

double draw_noise(const NoiseLaw& law, Rng& rng) {
    switch (law.kind) {
        case NoiseKind::gaussian: return std::sqrt(law.sigma2) * std::normal_distribution<double>()(rng);
        case NoiseKind::gmm: {
            const bool small = std::uniform_real_distribution<double>()(rng) < law.p;
            const double var = small ? law.delta2 : law.sigma2;
            return std::sqrt(var) * std::normal_distribution<double>()(rng);
        }
        case NoiseKind::uniform:
            return std::uniform_real_distribution<double>(-law.half_width, law.half_width)(rng);
        case NoiseKind::none: return 0.0;
    }
    return 0.0;
}

}  // namespace

void sample_row(const GroundTruth& truth, Rng& design_rng, Rng& noise_rng, Eigen::Ref<VectorXd> z,
                double& y) {
    switch (truth.setting) {
        case Setting::gaussian_mean:
            z.setOnes();
            y = truth.theta_star(0) + draw_noise(truth.noise, noise_rng);
            return;
        case Setting::polynomial: {
            const double zeta = std::uniform_real_distribution<double>(-1.0, 1.0)(design_rng);
            VectorXd one(1);
            one(0) = zeta;
            z = vandermonde_expand(one, truth.d).row(0).transpose();
            y = eval_poly_function(truth.f, zeta) + draw_noise(truth.noise, noise_rng);
            return;
        }
        case Setting::logistic: {
            z = standard_normal_vector(truth.d, design_rng);
            const double u = z.dot(truth.theta_star);
            const double prob = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
            y = std::uniform_real_distribution<double>()(noise_rng) < prob ? 1.0 : 0.0;
            return;
        }
        case Setting::linreg:
        case Setting::gmm:
        case Setting::uniform:
            z = standard_normal_vector(truth.d, design_rng);
            y = z.dot(truth.theta_star) + draw_noise(truth.noise, noise_rng);
            return;
    }
}

Dataset sample(const GroundTruth& truth, Index n, std::uint64_t seed,
               std::optional<std::uint64_t> design_seed) {
    truth.validate();
    if (n < 1) throw ConfigError("dataset needs n >= 1");
    const std::uint64_t design_master = derive_seed(design_seed.value_or(seed), stream::design);
    const std::uint64_t noise_master = derive_seed(seed, stream::noise);
    Dataset data(MatrixXd(n, truth.d), VectorXd(n), truth.kind);
    VectorXd z(truth.d);
    for (Index i = 0; i < n; ++i) {
        Rng design_rng = make_rng(design_master, static_cast<std::uint64_t>(i));
        Rng noise_rng = make_rng(noise_master, static_cast<std::uint64_t>(i));
        sample_row(truth, design_rng, noise_rng, z, data.Y(i));
        data.Z.row(i) = z.transpose();
    }
    return data;
}

namespace {

Generated generate(GroundTruth truth, Index n, std::uint64_t seed) {
    truth.validate();
    Dataset data = sample(truth, n, seed);
    return {std::move(data), std::move(truth)};
}

GroundTruth linear_truth(Setting s, Index d, const VectorXd& theta_star, NoiseLaw noise) {
    if (d < 1) throw ConfigError("d must be >= 1");
    GroundTruth t;
    t.setting = s;
    t.d = d;
    t.theta_star = theta_star;
    t.noise = noise;
    return t;
}

}  // namespace

Generated gen_linreg(Index n, Index d, const VectorXd& theta_star, double sigma2, std::uint64_t seed) {
    return generate(linear_truth(Setting::linreg, d, theta_star, {NoiseKind::gaussian, sigma2}), n, seed);
}

Generated gen_gaussian_mean(Index n, double theta, std::uint64_t seed) {
    return generate(linear_truth(Setting::gaussian_mean, 1, VectorXd::Constant(1, theta),
                                 {NoiseKind::gaussian, 1.0}),
                    n, seed);
}

Generated gen_polynomial(Index n, Index d, PolyFunction f, double sigma2_true, std::uint64_t seed) {
    GroundTruth t;
    t.setting = Setting::polynomial;
    t.d = d;
    t.noise = {NoiseKind::gaussian, sigma2_true};
    t.f = f;
    return generate(std::move(t), n, seed);
}

Generated gen_gmm_noise(Index n, Index d, const VectorXd& theta_star, double sigma2, double delta2,
                        double p, std::uint64_t seed) {
    return generate(linear_truth(Setting::gmm, d, theta_star, {NoiseKind::gmm, sigma2, delta2, p}), n,
                    seed);
}

Generated gen_uniform_noise(Index n, Index d, const VectorXd& theta_star, double half_width,
                            std::uint64_t seed) {
    NoiseLaw law{NoiseKind::uniform};
    law.half_width = half_width;
    return generate(linear_truth(Setting::uniform, d, theta_star, law), n, seed);
}

Generated gen_logistic(Index n, Index d, const VectorXd& theta_star, std::uint64_t seed) {
    GroundTruth t = linear_truth(Setting::logistic, d, theta_star, {NoiseKind::none});
    t.kind = DataKind::binary;
    return generate(std::move(t), n, seed);
}

namespace {

template <class E>
struct Names {
    E value;
    const char* name;
};

constexpr Names<Setting> kSettings[] = {{Setting::linreg, "linreg"},
                                        {Setting::gaussian_mean, "gaussian_mean"},
                                        {Setting::polynomial, "polynomial"},
                                        {Setting::gmm, "gmm"},
                                        {Setting::uniform, "uniform"},
                                        {Setting::logistic, "logistic"}};
constexpr Names<NoiseKind> kNoise[] = {{NoiseKind::gaussian, "gaussian"},
                                       {NoiseKind::gmm, "gmm"},
                                       {NoiseKind::uniform, "uniform"},
                                       {NoiseKind::none, "none"}};
constexpr Names<PolyFunction> kFunctions[] = {
    {PolyFunction::none, "none"}, {PolyFunction::parabola, "parabola"}, {PolyFunction::exp, "exp"}};

template <class E, std::size_t N>
std::string name_of(const Names<E> (&table)[N], E v) {
    for (const auto& e : table)
        if (e.value == v) return e.name;
    return "?";
}

template <class E, std::size_t N>
E parse_name(const Names<E> (&table)[N], const std::string& name, const char* what) {
    for (const auto& e : table)
        if (name == e.name) return e.value;
    std::string msg = std::string("unknown ") + what + " '" + name + "'; expected one of:";
    for (const auto& e : table) msg += std::string(" ") + e.name;
    throw ConfigError(msg);
}

}  // namespace

std::string to_string(Setting s) { return name_of(kSettings, s); }
Setting parse_setting(const std::string& name) { return parse_name(kSettings, name, "setting"); }
std::string to_string(NoiseKind k) { return name_of(kNoise, k); }
NoiseKind parse_noise_kind(const std::string& name) { return parse_name(kNoise, name, "noise kind"); }
std::string to_string(PolyFunction f) { return name_of(kFunctions, f); }
PolyFunction parse_poly_function(const std::string& name) {
    return parse_name(kFunctions, name, "function");
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

double parse_double(std::string_view s, std::size_t line) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        std::ostringstream os;
        os << "malformed number '" << s << "' on CSV line " << line;
        throw ConfigError(os.str());
    }
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    std::string out;
    for (Index j = 0; j < data.dim(); ++j) out += "z_" + std::to_string(j) + ",";
    out += "y\n";
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.dim(); ++j) {
            append_double(out, data.Z(i, j));
            out += ',';
        }
        append_double(out, data.Y(i));
        out += '\n';
    }
    os << out;
    if (!os) throw ConfigError("failed writing '" + path + "'");
}

Dataset read_dataset_csv(const std::string& path, DataKind kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open dataset '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("dataset '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    const Index d = static_cast<Index>(header.size()) - 1;
    if (d < 1 || header.back() != "y") throw ConfigError("dataset header must be z_0,...,z_{d-1},y");
    for (Index j = 0; j < d; ++j) {
        if (header[static_cast<std::size_t>(j)] != "z_" + std::to_string(j))
            throw ConfigError("dataset header column " + std::to_string(j) + " must be z_" +
                              std::to_string(j));
    }
    std::vector<double> values;
    std::size_t line_no = 1;
    Index n = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (static_cast<Index>(cells.size()) != d + 1) {
            std::ostringstream os;
            os << "CSV line " << line_no << " has " << cells.size() << " fields, expected " << d + 1;
            throw ConfigError(os.str());
        }
        for (auto c : cells) values.push_back(parse_double(c, line_no));
        ++n;
    }
    Dataset data(MatrixXd(n, d), VectorXd(n), kind);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) data.Z(i, j) = values[static_cast<std::size_t>(i * (d + 1) + j)];
        data.Y(i) = values[static_cast<std::size_t>(i * (d + 1) + d)];
    }
    data.validate();
    return data;
}

std::string truth_to_json(const GroundTruth& t) {
    json j;
    j["setting"] = to_string(t.setting);
    j["d"] = t.d;
    j["theta_star"] = std::vector<double>(t.theta_star.data(), t.theta_star.data() + t.theta_star.size());
    j["noise"] = {{"kind", to_string(t.noise.kind)},
                  {"sigma2", t.noise.sigma2},
                  {"delta2", t.noise.delta2},
                  {"p", t.noise.p},
                  {"half_width", t.noise.half_width}};
    j["function"] = to_string(t.f);
    j["kind"] = t.kind == DataKind::binary ? "binary" : "regression";
    j["design"] = "iid standard normal";
    if (t.setting == Setting::polynomial) j["design"] = "vandermonde of zeta ~ U(-1, 1)";
    if (t.setting == Setting::gaussian_mean) j["design"] = "ones";
    return j.dump(2);
}

GroundTruth truth_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        GroundTruth t;
        t.setting = parse_setting(j.at("setting").get<std::string>());
        t.d = j.at("d").get<Index>();
        const auto theta = j.at("theta_star").get<std::vector<double>>();
        t.theta_star = Eigen::Map<const VectorXd>(theta.data(), static_cast<Index>(theta.size()));
        const json& nz = j.at("noise");
        t.noise.kind = parse_noise_kind(nz.at("kind").get<std::string>());
        t.noise.sigma2 = nz.at("sigma2").get<double>();
        t.noise.delta2 = nz.at("delta2").get<double>();
        t.noise.p = nz.at("p").get<double>();
        t.noise.half_width = nz.at("half_width").get<double>();
        t.f = parse_poly_function(j.at("function").get<std::string>());
        t.kind = j.at("kind").get<std::string>() == "binary" ? DataKind::binary : DataKind::regression;
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed ground-truth JSON: ") + e.what());
    }
}

std::string truth_sidecar_path(const std::string& csv_path) {
    const auto dot = csv_path.rfind('.');
    const auto slash = csv_path.find_last_of("/\\");
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? csv_path.substr(0, dot) : csv_path) + ".truth.json";
}

}  // namespace tempcal
