#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "hyperseq/serialize.hpp"

using namespace hyperseq;
using namespace hyperseq::io;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("container round trip is bit-exact, save-load-save is byte-identical") {
    Rng rng(55);
    Container c;
    {
        ad::Tensor w = ad::Tensor::zeros({3, 4});
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.normal() * 1e-7 + rng.normal();
        c.entries.push_back({"w", opt::Space::euclidean, w});
    }
    {
        ad::Tensor b = ad::Tensor::zeros({5});
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.9, 0.9);
        c.entries.push_back({"b", opt::Space::manifold, b});
    }
    c.meta = nlohmann::json{{"epoch", 3}, {"note", "x"}};

    const std::string p1 = "container_a.bin", p2 = "container_b.bin";
    save_container(p1, c);
    Container back = load_container(p1);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].name == "w");
    CHECK(back.entries[0].space == opt::Space::euclidean);
    CHECK(back.entries[0].tensor.shape() == std::vector<std::size_t>{3, 4});
    CHECK(back.entries[0].tensor.data() == c.entries[0].tensor.data());
    CHECK(back.entries[1].space == opt::Space::manifold);
    CHECK(back.entries[1].tensor.data() == c.entries[1].tensor.data());
    CHECK(back.meta.at("epoch") == 3);

    save_container(p2, back);
    CHECK(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("container rejects corrupt files") {
    const std::string path = "container_bad.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPEgarbage";
    }
    CHECK_THROWS_AS(load_container(path), io_error);
    CHECK_THROWS_AS(load_container("does_not_exist.bin"), io_error);
    std::remove(path.c_str());
}
