#include "fedhash/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fedhash/compression.hpp"
#include "fedhash/model.hpp"
#include "fedhash/prng.hpp"
#include "fedhash/schema.hpp"
#include "fedhash/wire.hpp"

namespace fedhash {

namespace {

struct Check {
    const char* name;
    std::function<bool(std::string&)> fn;
};

bool check_fnv(std::string& why) {
    if (fnv1a64(nullptr, 0) != 0xcbf29ce484222325ULL) {
        why = "empty-string basis mismatch";
        return false;
    }
    const uint8_t a = 'a';
    if (fnv1a64(&a, 1) != 0xaf63dc4c8601ec8cULL) {
        why = "one-byte vector mismatch";
        return false;
    }
    return true;
}

bool check_splitmix(std::string& why) {
    SplitMix64 sm(0);
    if (sm.next() != 0xe220a8397b1dcdafULL || sm.next() != 0x6e789e6aa1b965f4ULL) {
        why = "stream from state 0 mismatch";
        return false;
    }
    if (mix64(42) != 0xbdd732262feb6e95ULL) {
        why = "mix64(42) mismatch";
        return false;
    }
    return true;
}

bool check_xoshiro(std::string& why) {
    Xoshiro256ss a(0);
    if (a.next() != 0x99ec5f36cb75f2b4ULL) {
        why = "seed 0 first output mismatch";
        return false;
    }
    Xoshiro256ss b(42);
    if (b.next() != 0x15780b2e0c2ec716ULL) {
        why = "seed 42 first output mismatch";
        return false;
    }
    return true;
}

bool check_index_vectors(std::string& why) {
    const std::vector<uint32_t> want_8_2_42 = {3, 1, 2, 0, 1, 2, 0, 3};
    const std::vector<uint32_t> want_8_2_0 = {1, 0, 3, 0, 1, 3, 2, 2};
    const std::vector<uint32_t> want_16_4_1 = {3, 2, 0, 3, 2, 3, 0, 0, 0, 1, 2, 2, 3, 1, 1, 1};
    if (make_index_map(8, {1, 2}, 42).indices != want_8_2_42 ||
        make_index_map(8, {1, 2}, 0).indices != want_8_2_0 ||
        make_index_map(16, {1, 4}, 1).indices != want_16_4_1) {
        why = "frozen index vector mismatch";
        return false;
    }
    return true;
}

bool check_index_multiset(std::string& why) {
    for (const uint64_t t : {8ull, 57ull, 256ull}) {
        for (const Ratio gamma : {Ratio{1, 2}, Ratio{1, 4}, Ratio{3, 7}}) {
            const IndexMap map = make_index_map(t, gamma, 7);
            std::vector<uint64_t> got(map.real_size, 0), want(map.real_size, 0);
            for (uint32_t idx : map.indices) ++got[idx];
            for (uint64_t e = 0; e < t; ++e) ++want[floor_mul(e, gamma)];
            if (got != want) {
                why = "histogram law broken at T=" + std::to_string(t);
                return false;
            }
        }
    }
    return true;
}

bool check_scatter_bruteforce(std::string& why) {
    Xoshiro256ss rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        const uint64_t t = 1 + rng.bounded(200);
        const Ratio gamma{1, static_cast<uint32_t>(1 + rng.bounded(8))};
        const IndexMap map = make_index_map(t, gamma, rng.next());
        std::vector<double> g(t);
        for (auto& v : g) v = rng.next_double() * 2.0 - 1.0;
        const std::vector<double> fast = scatter_grad(g, map);
        for (uint64_t k = 0; k < map.real_size; ++k) {
            double acc = 0.0;
            for (uint64_t p = 0; p < t; ++p) {
                if (map.indices[p] == k) acc += g[p];
            }
            if (acc != fast[k]) {
                why = "mismatch against the explicit double loop";
                return false;
            }
        }
    }
    return true;
}

bool check_adjointness(std::string& why) {
    Xoshiro256ss rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const uint64_t t = 2 + rng.bounded(500);
        const Ratio gamma{1, static_cast<uint32_t>(1 + rng.bounded(8))};
        const IndexMap map = make_index_map(t, gamma, rng.next());
        std::vector<double> u(t), v(map.real_size);
        for (auto& x : u) x = rng.next_double() * 2.0 - 1.0;
        for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
        const std::vector<double> ev = expand(v, map);
        const std::vector<double> su = scatter_grad(u, map);
        double lhs = 0.0, rhs = 0.0;
        for (uint64_t p = 0; p < t; ++p) lhs += u[p] * ev[p];
        for (uint64_t k = 0; k < map.real_size; ++k) rhs += su[k] * v[k];
        const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
        if (std::fabs(lhs - rhs) / scale > 1e-6) {
            why = "inner products differ beyond 1e-6";
            return false;
        }
    }
    return true;
}

bool check_wire(std::string& why) {
    WireMessage ack;
    ack.kind = MsgKind::Ack;
    if (serialize(ack).size() != 40) {
        why = "empty-payload message is not 40 bytes";
        return false;
    }
    WireMessage msg;
    msg.kind = MsgKind::Increment;
    msg.round = 3;
    msg.client_id = 1;
    msg.schema_digest = 0xabcdef;
    msg.payload = {{1.0f, -2.5f, 3.25f}};
    const auto bytes = serialize(msg);
    if (bytes.size() != 60 || bytes.size() != serialized_size(msg)) {
        why = "one-layer/3-float message is not 60 bytes";
        return false;
    }
    if (!(deserialize(bytes) == msg)) {
        why = "round trip changed the message";
        return false;
    }
    return true;
}

bool check_digest_uniqueness(std::string& why) {
    ModelSpec spec{ModelKind::Mlp1h, 16, 8, 4, true};
    std::vector<uint64_t> digests;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        digests.push_back(build_schema(spec.layers(), {1, 2}, seed).digest);
    }
    std::sort(digests.begin(), digests.end());
    if (std::adjacent_find(digests.begin(), digests.end()) != digests.end()) {
        why = "collision among 1000 perturbed schemas";
        return false;
    }
    return true;
}

bool check_axpy_ulp(std::string& why) {
    ModelSpec spec{ModelKind::LinearSoftmax, 12, 0, 5, true};
    const ParameterSchema schema = build_schema(spec.layers(), {1, 2}, 9);
    RealParams a = RealParams::zeros(schema);
    RealParams d = RealParams::zeros(schema);
    init_params(schema, a);
    Xoshiro256ss rng(5);
    for (auto& layer : d.layers) {
        for (auto& v : layer) v = static_cast<float>(rng.next_double() * 0.01 - 0.005);
    }
    RealParams restored = a;
    params_axpy(restored, 1.0f, d);
    params_axpy(restored, -1.0f, d);
    for (size_t l = 0; l < a.layers.size(); ++l) {
        for (size_t k = 0; k < a.layers[l].size(); ++k) {
            const float orig = a.layers[l][k];
            const float got = restored.layers[l][k];
            const float mag = std::max(std::fabs(orig), std::fabs(orig + d.layers[l][k]));
            const float ulp = std::nextafterf(mag, INFINITY) - mag;
            if (std::fabs(got - orig) > ulp) {
                why = "restore drifted past 1 ulp";
                return false;
            }
        }
    }
    return true;
}

}  // namespace

int run_verify() {
    const std::vector<Check> checks = {
        {"fnv1a64 vectors", check_fnv},
        {"splitmix64 vectors", check_splitmix},
        {"xoshiro256** vectors", check_xoshiro},
        {"frozen index vectors", check_index_vectors},
        {"index multiset law", check_index_multiset},
        {"scatter vs brute force", check_scatter_bruteforce},
        {"gather/scatter adjointness", check_adjointness},
        {"wire format", check_wire},
        {"schema digest uniqueness", check_digest_uniqueness},
        {"axpy 1-ulp restore", check_axpy_ulp},
    };
    int failed = 0;
    for (const auto& check : checks) {
        std::string why;
        const bool ok = check.fn(why);
        if (ok) {
            std::printf("ok   %s\n", check.name);
        } else {
            std::printf("FAIL %s: %s\n", check.name, why.c_str());
            ++failed;
        }
    }
    return failed;
}

}  // namespace fedhash
