#include "fedni/datagen.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "fedni/errors.hpp"
#include "fedni/graphcons.hpp"
#include "fedni/rng.hpp"

namespace fedni {

CohortSpec CohortSpec::defaults() {
    CohortSpec s;
    PhenoFieldSpec sex;
    sex.name = "sex";
    sex.kind = PhenoKind::categorical;
    sex.class_probs = {{0.6, 0.4}, {0.4, 0.6}};
    PhenoFieldSpec age;
    age.name = "age";
    age.kind = PhenoKind::continuous;
    age.mean = {68.0, 74.0};
    age.stddev = 6.0;
    s.phenotypes = {sex, age};
    return s;
}

namespace {
std::size_t sample_category(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        acc += probs[c];
        if (u < acc) return c;
    }
    return probs.size() - 1;
}
} // namespace

PopulationGraph generate_population(const CohortSpec& spec) {
    if (spec.n < 2 || spec.d < 1) throw config_error("generate_population: need n >= 2 and d >= 1");
    if (spec.class_sep < 0.0) throw config_error("generate_population: class_sep must be >= 0");
    if (spec.label_balance <= 0.0 || spec.label_balance >= 1.0)
        throw config_error("generate_population: label_balance must be in (0, 1)");
    if (spec.labeled_rate <= 0.0 || spec.labeled_rate > 1.0)
        throw config_error("generate_population: labeled_rate must be in (0, 1]");
    for (const auto& f : spec.phenotypes) {
        if (f.kind == PhenoKind::categorical) {
            if (f.class_probs.size() != 2 || f.class_probs[0].empty() ||
                f.class_probs[0].size() != f.class_probs[1].size())
                throw config_error("generate_population: bad class_probs for field '" + f.name + "'");
        } else if (f.stddev <= 0.0) {
            throw config_error("generate_population: stddev must be > 0 for field '" + f.name + "'");
        }
    }

    Rng rng(spec.seed);
    PopulationGraph g;
    const std::size_t n = spec.n, d = spec.d;

    // labels: balanced count, shuffled assignment
    const auto n_pos = std::size_t(std::llround(double(n) * spec.label_balance));
    g.y.assign(n, 0);
    for (std::size_t i = 0; i < n_pos && i < n; ++i) g.y[i] = 1;
    rng.shuffle(g.y);

    // class means separated by class_sep along a random unit direction
    std::vector<double> dir(d);
    double norm = 0.0;
    for (auto& v : dir) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        dir[0] = 1.0;
        norm = 1.0;
    }
    for (auto& v : dir) v = v / norm * spec.class_sep;

    g.X = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            g.X(i, j) = rng.normal() + (g.y[i] == 1 ? dir[j] : 0.0);

    // z-score each feature column
    Matrix mu = col_means(g.X);
    Matrix var = col_vars(g.X, mu);
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = var(0, j) > 1e-12 ? std::sqrt(var(0, j)) : 1.0;
        for (std::size_t i = 0; i < n; ++i) g.X(i, j) = (g.X(i, j) - mu(0, j)) / sd;
    }

    // class-conditional phenotypes
    g.U.values = Matrix(n, spec.phenotypes.size());
    for (const auto& f : spec.phenotypes) {
        PhenotypeField pf;
        pf.name = f.name;
        pf.kind = f.kind;
        pf.n_categories = f.kind == PhenoKind::categorical ? f.class_probs[0].size() : 0;
        g.U.fields.push_back(pf);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = std::size_t(g.y[i]);
        for (std::size_t q = 0; q < spec.phenotypes.size(); ++q) {
            const auto& f = spec.phenotypes[q];
            if (f.kind == PhenoKind::categorical)
                g.U.values(i, q) = double(sample_category(f.class_probs[cls], rng));
            else
                g.U.values(i, q) = rng.normal(f.mean[cls], f.stddev);
        }
    }

    // labeled mask
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_labeled = std::size_t(std::llround(double(n) * spec.labeled_rate));
    g.labeled_mask.assign(n, 0);
    for (std::size_t i = 0; i < n_labeled && i < n; ++i) g.labeled_mask[order[i]] = 1;

    g.provenance.assign(n, kNodeReal);
    g.params = spec.graph;
    finalize_graph(g);
    return g;
}

std::vector<PopulationGraph> partition_clients(const PopulationGraph& g, std::size_t m,
                                               std::uint64_t seed, bool induced_subgraph) {
    if (m < 1) throw config_error("partition_clients: need m >= 1");
    if (g.n() < 2 * m) throw config_error("partition_clients: need n >= 2m nodes");
    std::vector<std::size_t> order(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<PopulationGraph> clients;
    clients.reserve(m);
    const std::size_t base = g.n() / m, extra = g.n() % m;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < m; ++c) {
        const std::size_t count = base + (c < extra ? 1 : 0);
        std::vector<std::size_t> ids(order.begin() + long(pos), order.begin() + long(pos + count));
        pos += count;
        if (induced_subgraph) {
            clients.push_back(g.subset(ids));
        } else {
            PopulationGraph local;
            local.X = Matrix(ids.size(), g.feature_dim());
            for (std::size_t r = 0; r < ids.size(); ++r)
                for (std::size_t j = 0; j < g.feature_dim(); ++j) local.X(r, j) = g.X(ids[r], j);
            local.U = g.U.subset(ids);
            for (std::size_t id : ids) {
                local.y.push_back(g.y[id]);
                local.labeled_mask.push_back(g.labeled_mask[id]);
                local.provenance.push_back(g.provenance[id]);
            }
            local.params = g.params;
            finalize_graph(local);
            clients.push_back(std::move(local));
        }
    }
    return clients;
}

namespace {
constexpr char kMagic[4] = {'F', 'N', 'I', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
    put_u32(out, std::uint32_t(v & 0xffffffffULL));
    put_u32(out, std::uint32_t(v >> 32));
}

void put_f64(std::ofstream& out, double v) {
    static_assert(sizeof(double) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw format_error("dataset file truncated");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::ifstream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

double get_f64(std::ifstream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_string(std::ofstream& out, const std::string& s) {
    put_u32(out, std::uint32_t(s.size()));
    out.write(s.data(), long(s.size()));
}

std::string get_string(std::ifstream& in) {
    const std::uint32_t len = get_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), long(len));
    if (!in) throw format_error("dataset file truncated in string");
    return s;
}
} // namespace

void save_dataset(const PopulationGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("save_dataset: cannot open " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);

    // features
    put_u64(out, g.n());
    put_u64(out, g.feature_dim());
    for (double v : g.X.raw()) put_f64(out, v);

    // phenotypes: typed columns
    put_u32(out, std::uint32_t(g.U.n_fields()));
    for (std::size_t q = 0; q < g.U.n_fields(); ++q) {
        const auto& f = g.U.fields[q];
        out.put(char(std::uint8_t(f.kind)));
        put_string(out, f.name);
        put_u32(out, std::uint32_t(f.n_categories));
        for (std::size_t i = 0; i < g.n(); ++i) {
            if (f.kind == PhenoKind::categorical)
                put_u32(out, std::uint32_t(g.U.values(i, q)));
            else
                put_f64(out, g.U.values(i, q));
        }
    }

    // labels
    for (std::size_t i = 0; i < g.n(); ++i) out.put(char(std::uint8_t(g.y[i])));

    // labeled mask as packed bitset
    std::vector<std::uint8_t> bits((g.n() + 7) / 8, 0);
    for (std::size_t i = 0; i < g.n(); ++i)
        if (g.labeled_mask[i]) bits[i / 8] |= std::uint8_t(1u << (i % 8));
    out.write(reinterpret_cast<const char*>(bits.data()), long(bits.size()));

    // construction params
    put_u32(out, std::uint32_t(g.params.k));
    put_f64(out, g.params.sigma);
    put_f64(out, g.params.gamma);
    put_u32(out, std::uint32_t(g.params.d_h));
    if (!out) throw format_error("save_dataset: write failed for " + path);
}

PopulationGraph load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("load_dataset: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw format_error("load_dataset: bad magic bytes (not a FNI1 dataset)");
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw format_error("load_dataset: unsupported version " + std::to_string(version));

    PopulationGraph g;
    const std::uint64_t n = get_u64(in);
    const std::uint64_t d = get_u64(in);
    g.X = Matrix(n, d);
    for (auto& v : g.X.raw()) v = get_f64(in);

    const std::uint32_t q = get_u32(in);
    g.U.values = Matrix(n, q);
    for (std::uint32_t f = 0; f < q; ++f) {
        PhenotypeField field;
        const int kind = in.get();
        if (kind != 0 && kind != 1) throw format_error("load_dataset: unknown phenotype kind");
        field.kind = PhenoKind(std::uint8_t(kind));
        field.name = get_string(in);
        field.n_categories = get_u32(in);
        g.U.fields.push_back(field);
        for (std::uint64_t i = 0; i < n; ++i)
            g.U.values(i, f) = field.kind == PhenoKind::categorical ? double(get_u32(in)) : get_f64(in);
    }

    g.y.resize(n);
    for (auto& v : g.y) {
        const int b = in.get();
        if (b == EOF) throw format_error("load_dataset: truncated labels");
        v = int(std::uint8_t(b));
    }

    std::vector<std::uint8_t> bits((n + 7) / 8);
    in.read(reinterpret_cast<char*>(bits.data()), long(bits.size()));
    if (!in) throw format_error("load_dataset: truncated mask");
    g.labeled_mask.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) g.labeled_mask[i] = (bits[i / 8] >> (i % 8)) & 1u;

    g.params.k = get_u32(in);
    g.params.sigma = get_f64(in);
    g.params.gamma = get_f64(in);
    g.params.d_h = get_u32(in);

    g.provenance.assign(n, kNodeReal);
    finalize_graph(g);
    return g;
}

CohortSpec parse_cohort_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cohort spec: cannot open " + path);
    CohortSpec spec = CohortSpec::defaults();
    double sex_skew = 0.1, age_mean0 = 68.0, age_mean1 = 74.0, age_std = 6.0;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string key, eq, value;
        std::istringstream ls(line);
        if (!(ls >> key)) continue;
        if (!(ls >> eq >> value) || eq != "=")
            throw format_error("cohort spec: expected 'key = value' at line " + std::to_string(lineno));
        try {
            if (key == "n") spec.n = std::stoul(value);
            else if (key == "d") spec.d = std::stoul(value);
            else if (key == "class_sep") spec.class_sep = std::stod(value);
            else if (key == "label_balance") spec.label_balance = std::stod(value);
            else if (key == "labeled_rate") spec.labeled_rate = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "k") spec.graph.k = std::stoul(value);
            else if (key == "d_h") spec.graph.d_h = std::stoul(value);
            else if (key == "sigma") spec.graph.sigma = std::stod(value);
            else if (key == "gamma") spec.graph.gamma = std::stod(value);
            else if (key == "sex_skew") sex_skew = std::stod(value);
            else if (key == "age_mean0") age_mean0 = std::stod(value);
            else if (key == "age_mean1") age_mean1 = std::stod(value);
            else if (key == "age_std") age_std = std::stod(value);
            else throw format_error("cohort spec: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw format_error("cohort spec: bad value for '" + key + "' at line " + std::to_string(lineno));
        }
    }
    spec.phenotypes[0].class_probs = {{0.5 + sex_skew, 0.5 - sex_skew}, {0.5 - sex_skew, 0.5 + sex_skew}};
    spec.phenotypes[1].mean = {age_mean0, age_mean1};
    spec.phenotypes[1].stddev = age_std;
    return spec;
}

} // namespace fedni
