#include <doctest.h>

#include "papercast/common/error.hpp"
#include "papercast/common/io.hpp"
#include "papercast/common/rng.hpp"
#include "papercast/common/text.hpp"
#include "support.hpp"

using namespace papercast;

TEST_SUITE("common") {
  TEST_CASE("sha256 matches the FIPS 180-2 test vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(stable_hash("abc") == 0xba7816bf8f01cfeaULL);
  }

  TEST_CASE("rng streams are reproducible and salted") {
    Rng a(42), b(42), c(42, "other");
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      auto x = a.next();
      CHECK(x == b.next());
      if (x != c.next()) differs = true;
    }
    CHECK(differs);
    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
      int v = r.uniform_int(1, 5);
      CHECK((v >= 1 && v <= 5));
      double u = r.unit();
      CHECK((u >= 0.0 && u < 1.0));
    }
  }

  TEST_CASE("text helpers") {
    CHECK(text::count_words("  one two\tthree\nfour ") == 4);
    CHECK(text::slugify("arXiv:2401.01234v2") == "arxiv_2401_01234v2");
    CHECK(text::normalize_space("  a \n\n b  ") == "a b");
    CHECK(text::contains_ci("Zoom-In on", "zoom-in"));
  }

  TEST_CASE("atomic writes create parent directories and round-trip json") {
    testing::TempDir dir("io");
    auto p = dir / "a/b/c.json";
    write_json(p, {{"k", 1}});
    CHECK(read_json(p)["k"] == 1);
    CHECK(read_file(p).back() == '\n');
    append_line(dir / "x/log.jsonl", "one");
    append_line(dir / "x/log.jsonl", "two");
    CHECK(read_file(dir / "x/log.jsonl") == "one\ntwo\n");
  }

  TEST_CASE("missing files raise typed errors") {
    try {
      (void)read_file("/nonexistent/papercast/file");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::IoError || e.code() == ErrorCode::NotFound));
    }
    CHECK(to_string(ErrorCode::DurationMismatch) == "DurationMismatch");
  }
}
