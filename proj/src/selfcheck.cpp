#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ulgfbp/classify.hpp"
#include "ulgfbp/cli.hpp"
#include "ulgfbp/gabor.hpp"
#include "ulgfbp/rng.hpp"
#include "ulgfbp/ulbp.hpp"

namespace ulgfbp {

namespace {

std::string corrupt_target() {
    const char* env = std::getenv("ULGFBP_SELFCHECK_CORRUPT");
    return env ? env : "";
}

// Independent transition counter: walks the ring as index pairs with an
// explicit modular successor instead of shifting a register.
int oracle_transitions(unsigned pattern) {
    int t = 0;
    for (int i = 0; i < 8; ++i) {
        const unsigned a = (pattern >> i) & 1u;
        const unsigned b = (pattern >> ((i + 1) % 8)) & 1u;
        t += static_cast<int>(a != b);
    }
    return t;
}

bool check_ulbp_table(std::ostream& err) {
    UlbpTables tables = build_ulbp_tables();
    if (corrupt_target() == "ulbp-table") tables.u2[37] ^= 1; // fault injection hook

    // Recompute the ranking independently: uniform patterns in increasing
    // numeric order get ranks 0..57, everything else the shared bucket.
    std::vector<int> uniform_patterns;
    for (int p = 0; p < 256; ++p)
        if (oracle_transitions(static_cast<unsigned>(p)) <= 2) uniform_patterns.push_back(p);
    if (uniform_patterns.size() != 58) {
        err << "ulbp-table: expected 58 uniform patterns, found " << uniform_patterns.size()
            << "\n";
        return false;
    }

    std::set<int> u2_labels, riu2_labels;
    for (int p = 0; p < 256; ++p) {
        const int u = oracle_transitions(static_cast<unsigned>(p));
        if (tables.transitions[p] != u) {
            err << "ulbp-table: transition mismatch at pattern " << p << "\n";
            return false;
        }
        int expect_u2 = kNonUniformU2Label;
        int expect_riu2 = 9;
        if (u <= 2) {
            expect_u2 = static_cast<int>(
                std::lower_bound(uniform_patterns.begin(), uniform_patterns.end(), p) -
                uniform_patterns.begin());
            expect_riu2 = 0;
            for (int i = 0; i < 8; ++i) expect_riu2 += (p >> i) & 1;
        }
        if (tables.u2[p] != expect_u2) {
            err << "ulbp-table: u2 label mismatch at pattern " << p << "\n";
            return false;
        }
        if (tables.riu2[p] != expect_riu2) {
            err << "ulbp-table: riu2 label mismatch at pattern " << p << "\n";
            return false;
        }
        u2_labels.insert(tables.u2[p]);
        riu2_labels.insert(tables.riu2[p]);
    }
    if (u2_labels.size() != 59 || riu2_labels.size() != 10) {
        err << "ulbp-table: label cardinality wrong (" << u2_labels.size() << " u2, "
            << riu2_labels.size() << " riu2)\n";
        return false;
    }
    return true;
}

bool check_gabor_dc(std::ostream& err) {
    const GaborBank bank = build_filter_bank(default_omegas(), default_thetas());
    const double value = 0.7;
    FloatImage img(37, 29, value);
    for (std::size_t i = 0; i < bank.kernels.size(); ++i) {
        const auto& k = bank.kernels[i];
        double kmax = 0.0;
        for (const auto& v : k.values) kmax = std::max(kmax, std::abs(v));
        const ComplexImage resp = apply_gabor(img, k);
        double rmax = 0.0;
        for (const auto& v : resp.data) rmax = std::max(rmax, std::abs(v));
        if (!(rmax < 1e-3 * value * kmax)) {
            err << "gabor-dc: kernel " << i << " leaks " << rmax << " (limit "
                << 1e-3 * value * kmax << ")\n";
            return false;
        }
    }
    return true;
}

bool check_conv_equivalence(std::ostream& err) {
    const GaborBank bank = build_filter_bank(default_omegas(), default_thetas());
    Rng rng(0xC0DEULL);
    for (std::size_t ki = 0; ki < bank.kernels.size(); ++ki) {
        for (int trial = 0; trial < 5; ++trial) {
            FloatImage img(32, 32);
            for (double& v : img.data) v = rng.uniform(-1.0, 1.0);
            const ComplexImage direct = apply_gabor(img, bank.kernels[ki], ConvMethod::Direct);
            const ComplexImage fft = apply_gabor(img, bank.kernels[ki], ConvMethod::Fft);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < direct.data.size(); ++i) {
                num += std::norm(direct.data[i] - fft.data[i]);
                den += std::norm(direct.data[i]);
            }
            const double rel = std::sqrt(num / std::max(den, 1e-300));
            if (!(rel < 1e-6)) {
                err << "conv-equivalence: kernel " << ki << " trial " << trial
                    << " relative error " << rel << "\n";
                return false;
            }
        }
    }
    return true;
}

bool check_gradients(std::ostream& err) {
    const int input_size = 8, n_classes = 3;
    ResidualNet net = make_residual_net(input_size, n_classes, 1, 7ULL);
    Rng rng(11ULL);

    const std::size_t map_len = static_cast<std::size_t>(3) * input_size * input_size;
    std::vector<std::vector<float>> maps(4, std::vector<float>(map_len));
    std::vector<int> targets;
    MapBatch batch;
    batch.size = input_size;
    for (auto& m : maps) {
        for (float& v : m) v = static_cast<float>(rng.uniform());
        batch.maps.push_back(m.data());
    }
    for (int i = 0; i < 4; ++i) targets.push_back(static_cast<int>(rng.below(n_classes)));

    std::vector<ForwardCache> caches;
    auto probs = forward(net, batch, &caches);
    Gradients grads = backward(net, batch, targets, caches, probs);

    auto loss_at = [&]() { return mean_cross_entropy(forward(net, batch), targets); };

    auto params = net.parameters();
    const double h = 1e-6;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        double num = 0.0, den_a = 0.0, den_n = 0.0;
        for (std::size_t i = 0; i < p.v.size(); ++i) {
            const double orig = p.v[i];
            p.v[i] = orig + h;
            const double lp = loss_at();
            p.v[i] = orig - h;
            const double lm = loss_at();
            p.v[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = grads.tensors[pi].v[i];
            num += (an - fd) * (an - fd);
            den_a += an * an;
            den_n += fd * fd;
        }
        const double rel = std::sqrt(num / std::max({den_a, den_n, 1e-300}));
        if (!(rel < 1e-4)) {
            err << "gradient-check: tensor " << pi << " relative error " << rel << "\n";
            return false;
        }
    }
    return true;
}

} // namespace

int cmd_selfcheck(std::ostream& out, std::ostream& err) {
    struct Suite {
        const char* name;
        bool (*fn)(std::ostream&);
    };
    const Suite suites[] = {
        {"ulbp-table", check_ulbp_table},
        {"gabor-dc", check_gabor_dc},
        {"conv-equivalence", check_conv_equivalence},
        {"gradient-check", check_gradients},
    };
    bool all_ok = true;
    for (const auto& s : suites) {
        bool ok = false;
        try {
            ok = s.fn(err);
        } catch (const std::exception& e) {
            err << s.name << ": " << e.what() << "\n";
        }
        out << (ok ? "PASS " : "FAIL ") << s.name << "\n";
        all_ok = all_ok && ok;
    }
    return all_ok ? kExitOk : kExitInternal;
}

} // namespace ulgfbp
