#include <cmath>
#include <csetjmp>
#include <cstdio>

#include <jpeglib.h>

#include "dfx/core/dataset.hpp"
#include "dfx/core/encoding.hpp"
#include "dfx/core/image.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/core/types.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"

using namespace dfx;

namespace {

std::vector<std::uint8_t> encode_test_jpeg(int w, int h) {
  jpeg_compress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* out = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &out, &size);
  cinfo.image_width = w;
  cinfo.image_height = h;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 95, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3, 128);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW ptr = row.data();
    jpeg_write_scanlines(&cinfo, &ptr, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> bytes(out, out + size);
  jpeg_destroy_compress(&cinfo);
  std::free(out);
  return bytes;
}

}  // namespace

TEST_CASE("image buffer validates shape and range") {
  CHECK_THROWS_KIND(ImageBuffer(0, 4, 3), ErrorKind::input);
  CHECK_THROWS_KIND(ImageBuffer(2, 2, 3, std::vector<double>(5, 0.0)), ErrorKind::input);

  ImageBuffer img(2, 3, 3, 0.25);
  CHECK_NOTHROW(img.validate());
  img.at(1, 2, 0) = 1.5;
  CHECK_THROWS_KIND(img.validate(), ErrorKind::input);
  img.at(1, 2, 0) = std::nan("");
  CHECK_THROWS_KIND(img.validate(), ErrorKind::input);
}

TEST_CASE("prediction label follows threshold") {
  CHECK(Prediction::from_score(0.5, 0.5).label == Label::fake);
  CHECK(Prediction::from_score(0.4999, 0.5).label == Label::real);
  CHECK(Prediction::from_logit(0.0, 0.5).score == doctest::Approx(0.5));
  CHECK_THROWS_KIND(Prediction::from_score(0.5, 1.0), ErrorKind::configuration);
  CHECK_THROWS_KIND(Prediction::from_score(0.5, 0.0), ErrorKind::configuration);
}

TEST_CASE("audience enums parse and reject") {
  CHECK(parse_user_type("public") == UserType::public_user);
  CHECK(parse_user_type("forensic_analyst") == UserType::forensic_analyst);
  CHECK(parse_intent("traceability") == Intent::traceability);
  try {
    parse_intent("speed");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find("transparency") != std::string::npos);
  }
  const nlohmann::json j = AudienceProfile{UserType::public_user, Intent::usability};
  CHECK(j.dump() == R"({"intent":"usability","user_type":"public"})");
  CHECK(j.get<AudienceProfile>() == AudienceProfile{UserType::public_user, Intent::usability});
}

TEST_CASE("round half up at display precision") {
  CHECK(round_half_up(0.9125, 3) == doctest::Approx(0.913).epsilon(1e-12));
  CHECK(round_half_up(0.7775, 3) == doctest::Approx(0.778).epsilon(1e-12));
  CHECK(round_half_up(0.90, 3) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(round_half_up(0.91249, 3) == doctest::Approx(0.912).epsilon(1e-12));
  CHECK(round_half_up(4.25, 1) == doctest::Approx(4.3).epsilon(1e-12));
  CHECK(format_fixed(0.9, 3) == "0.900");
}

TEST_CASE("base64 and digest") {
  CHECK(base64_encode(std::string_view("hello")) == "aGVsbG8=");
  const auto decoded = base64_decode("aGVsbG8=");
  CHECK(std::string(decoded.begin(), decoded.end()) == "hello");
  CHECK(base64_decode("").empty());
  CHECK_THROWS_KIND(base64_decode("a$b="), ErrorKind::parse);
  CHECK(sha256_digest(std::string_view("abc")) ==
        "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("uuid and timestamp shapes") {
  const std::string a = new_uuid();
  CHECK(a.size() == 36);
  CHECK(a[14] == '4');
  CHECK(a != new_uuid());
  const std::string ts = utc_timestamp_now();
  CHECK(ts.size() == 24);
  CHECK(ts.back() == 'Z');
}

TEST_CASE("png round trip quantizes half up") {
  ImageBuffer img(3, 2, 3, 0.0);
  img.at(0, 0, 0) = 1.0;
  img.at(1, 1, 2) = 0.5;  // 127.5 -> 128
  img.at(2, 0, 1) = 0.2;
  const ImageBuffer back = decode_image(encode_png(img));
  CHECK(back.shape() == img.shape());
  CHECK(back.at(0, 0, 0) == 1.0);
  CHECK(back.at(1, 1, 2) == doctest::Approx(128.0 / 255.0));
  CHECK(back.at(2, 0, 1) == doctest::Approx(51.0 / 255.0));
}

TEST_CASE("jpeg decodes and garbage is rejected") {
  const auto jpeg = encode_test_jpeg(8, 4);
  CHECK(looks_like_jpeg(jpeg));
  const ImageBuffer img = decode_image(jpeg);
  CHECK(img.height() == 4);
  CHECK(img.width() == 8);
  CHECK(img.at(2, 3, 1) == doctest::Approx(128.0 / 255.0).epsilon(0.02));

  const std::string text = "just some text, not an image";
  CHECK_THROWS_KIND(decode_image(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size())),
                    ErrorKind::input);
  auto truncated = encode_png(ImageBuffer(4, 4, 3, 0.5));
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_KIND(decode_image(truncated), ErrorKind::input);
}

TEST_CASE("atomic write leaves no temp files") {
  const auto dir = testing::scratch_dir("atomic");
  write_file_atomic(dir / "a.txt", std::string_view("one"));
  write_file_atomic(dir / "a.txt", std::string_view("two"));
  const auto bytes = read_file_bytes(dir / "a.txt");
  CHECK(std::string(bytes.begin(), bytes.end()) == "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}

TEST_CASE("subset tags and boxes") {
  CHECK(parse_subset("EFS") == Subset::EFS);
  CHECK_FALSE(parse_subset("XYZ").has_value());
  const Box b{2, 3, 4, 5};
  CHECK(b.contains(2.0, 3.0));
  CHECK_FALSE(b.contains(6.0, 3.0));
  CHECK_FALSE(b.contains(2.0, 8.0));
}
