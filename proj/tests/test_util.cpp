#include <doctest.h>

#include "hardcase/rng.h"
#include "hardcase/util.h"

using namespace hardcase;

TEST_CASE("crc32 matches the standard check value") {
    CHECK(crc32("123456789") == 0xcbf43926u);
    CHECK(crc32("") == 0u);
}

TEST_CASE("base64") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("normalize_for_match") {
    CHECK(normalize_for_match("  Agents’   RANK\tis ") == "agents' rank is");
    CHECK(normalize_for_match("a\r\nb") == "a b");
}

TEST_CASE("format_sig and round_sig") {
    CHECK(format_sig(0.12345678901, 6) == "0.123457");
    CHECK(format_sig(100.0, 6) == "100");
    CHECK(round_sig(0.12345678901, 6) == 0.123457);
}

TEST_CASE("rng basics") {
    SUBCASE("same seed, same stream") {
        Rng a(42), b(42);
        for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    }
    SUBCASE("below stays in range and reaches both ends") {
        Rng rng(7);
        bool saw_zero = false, saw_max = false;
        for (int i = 0; i < 2000; ++i) {
            const auto v = rng.below(5);
            CHECK(v < 5);
            saw_zero |= (v == 0);
            saw_max |= (v == 4);
        }
        CHECK(saw_zero);
        CHECK(saw_max);
    }
    SUBCASE("derive_seed decorrelates trial indices") {
        CHECK(derive_seed(1, 0) != derive_seed(1, 1));
        CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    }
    SUBCASE("shuffle is a permutation") {
        Rng rng(9);
        std::vector<int> v = {1, 2, 3, 4, 5, 6, 7};
        auto shuffled = v;
        rng.shuffle(shuffled);
        std::sort(shuffled.begin(), shuffled.end());
        CHECK(shuffled == v);
    }
}
