#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "birkhoff/ingest.hpp"
#include "test_support.hpp"

using namespace birkhoff;
using birkhoff::testing::make_score;
using birkhoff::testing::note;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::InvalidArgument;
}

std::vector<std::uint8_t> header(int format, int ntracks, int division) {
    return {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, static_cast<std::uint8_t>(format), 0, static_cast<std::uint8_t>(ntracks),
            static_cast<std::uint8_t>(division >> 8), static_cast<std::uint8_t>(division & 0xFF)};
}

std::vector<std::uint8_t> track(std::vector<std::uint8_t> events) {
    std::vector<std::uint8_t> t = {'M', 'T', 'r', 'k', 0, 0, 0, 0};
    const auto n = events.size();
    t[4] = static_cast<std::uint8_t>(n >> 24);
    t[5] = static_cast<std::uint8_t>(n >> 16);
    t[6] = static_cast<std::uint8_t>(n >> 8);
    t[7] = static_cast<std::uint8_t>(n);
    t.insert(t.end(), events.begin(), events.end());
    return t;
}

std::vector<std::uint8_t> concat(std::initializer_list<std::vector<std::uint8_t>> parts) {
    std::vector<std::uint8_t> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

const char* kOneNoteDoc = R"({
  "key": {"tonic": 0, "mode": "major"},
  "beats_per_bar": 4,
  "notes": [{"onset": 0, "duration": "3/2", "pitch": 60, "voice": 0}],
  "chords": [{"onset": 0, "root": 0, "quality": "major"}],
  "label": "composer"
})";

}  // namespace

// 480 ticks per beat; tick 480 = one beat.
TEST(ParseSmf, MinimalFormatZero) {
    const auto bytes = concat({header(0, 1, 480),
                               track({0x00, 0x90, 60, 100, 0x83, 0x60, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00})});
    const auto r = parse_smf(bytes);
    ASSERT_EQ(r.score.notes.size(), 1u);
    EXPECT_EQ(r.score.notes[0].onset, Beat(0));
    EXPECT_EQ(r.score.notes[0].duration, Beat(1));
    EXPECT_EQ(r.score.notes[0].pitch.midi, 60);
    EXPECT_TRUE(r.score.chords.empty());
    EXPECT_EQ(r.score.key, (KeySignature{0, Mode::major}));
    EXPECT_EQ(r.diagnostics.source_format, SourceFormat::smf);
    EXPECT_FALSE(r.diagnostics.warnings.empty());
}

TEST(ParseSmf, VelocityZeroIsRelease) {
    const auto explicit_off = concat({header(0, 1, 480),
                                      track({0x00, 0x90, 60, 100, 0x83, 0x60, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00})});
    const auto vel_zero = concat({header(0, 1, 480),
                                  track({0x00, 0x90, 60, 100, 0x83, 0x60, 0x90, 60, 0, 0x00, 0xFF, 0x2F, 0x00})});
    EXPECT_EQ(parse_smf(explicit_off).score, parse_smf(vel_zero).score);
}

TEST(ParseSmf, RunningStatus) {
    const auto bytes = concat({header(0, 1, 96), track({0x00, 0x90, 60, 100, 0x60, 60, 0, 0x00, 64, 90, 0x60, 64, 0,
                                                        0x00, 0xFF, 0x2F, 0x00})});
    const auto r = parse_smf(bytes);
    ASSERT_EQ(r.score.notes.size(), 2u);
    EXPECT_EQ(r.score.notes[1].onset, Beat(1));
    EXPECT_EQ(r.score.notes[1].pitch.midi, 64);
}

TEST(ParseSmf, FormatTwoUnsupported) {
    const auto bytes = concat({header(2, 1, 480), track({0x00, 0xFF, 0x2F, 0x00})});
    EXPECT_EQ(kind_of([&] { parse_smf(bytes); }), ErrorKind::UnsupportedFormat);
}

TEST(ParseSmf, ZeroDivision) {
    const auto bytes = concat({header(0, 1, 0), track({0x00, 0xFF, 0x2F, 0x00})});
    EXPECT_EQ(kind_of([&] { parse_smf(bytes); }), ErrorKind::ZeroDivision);
}

TEST(ParseSmf, DanglingNoteOn) {
    const auto bytes = concat({header(0, 1, 480), track({0x00, 0x90, 60, 100, 0x00, 0xFF, 0x2F, 0x00})});
    EXPECT_EQ(kind_of([&] { parse_smf(bytes); }), ErrorKind::DanglingNoteOn);
}

TEST(ParseSmf, BadMagic) {
    std::vector<std::uint8_t> bytes = {'M', 'T', 'r', 'k', 0, 0, 0, 0};
    EXPECT_EQ(kind_of([&] { parse_smf(bytes); }), ErrorKind::MalformedHeader);
    EXPECT_EQ(kind_of([&] { parse_smf({}); }), ErrorKind::MalformedHeader);
}

TEST(ParseSmf, KeySignatureMeta) {
    // two flats, minor: G minor
    const auto bytes = concat({header(0, 1, 480), track({0x00, 0xFF, 0x59, 0x02, 0xFE, 0x01, 0x00, 0x90, 67, 90, 0x83,
                                                         0x60, 0x80, 67, 0, 0x00, 0xFF, 0x2F, 0x00})});
    EXPECT_EQ(parse_smf(bytes).score.key, (KeySignature{7, Mode::minor}));
}

TEST(ParseSmf, EncodeRoundTrip) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto s = birkhoff::testing::random_score(seed, 4);
        const auto r = parse_smf(encode_smf(s));
        EXPECT_EQ(r.score.notes, s.notes) << seed;
        EXPECT_EQ(r.score.key, s.key);
        EXPECT_EQ(r.score.beats_per_bar, s.beats_per_bar);
    }
}

// onset * division recovers the original tick exactly.
TEST(ParseSmf, TickToBeatIsExact) {
    for (int division : {96, 120, 384, 480, 960}) {
        std::vector<std::uint8_t> ev;
        const std::uint32_t ticks[] = {0, 1, 7, 95, 333, 1001};
        std::uint32_t prev = 0;
        for (auto t : ticks) {
            detail::put_vlq(ev, t - prev);
            ev.insert(ev.end(), {0x90, 60, 80});
            detail::put_vlq(ev, 1);
            ev.insert(ev.end(), {0x80, 60, 0});
            prev = t + 1;
        }
        ev.insert(ev.end(), {0x00, 0xFF, 0x2F, 0x00});
        const auto r = parse_smf(concat({header(0, 1, division), track(ev)}));
        ASSERT_EQ(r.score.notes.size(), std::size(ticks));
        for (std::size_t i = 0; i < std::size(ticks); ++i) {
            const Beat t = r.score.notes[i].onset * Beat(division);
            ASSERT_EQ(t, Beat(ticks[i]));
        }
    }
}

TEST(ParseSmf, FuzzedInputsOnlyRaiseTypedErrors) {
    const auto base = encode_smf(birkhoff::testing::random_score(3, 4));
    Rng rng(99, 0, 0);
    for (int i = 0; i < 300; ++i) {
        auto bytes = base;
        const int edits = rng.between(1, 8);
        for (int e = 0; e < edits; ++e) bytes[rng.below(bytes.size())] = static_cast<std::uint8_t>(rng.below(256));
        if (rng.chance(0.2)) bytes.resize(rng.below(bytes.size()));
        try {
            parse_smf(bytes);
        } catch (const Error&) {
        }
    }
    SUCCEED();
}

TEST(ScoreText, OneNoteDocument) {
    const auto r = parse_score_text(kOneNoteDoc);
    ASSERT_EQ(r.score.notes.size(), 1u);
    EXPECT_EQ(r.score.notes[0].duration, Beat(3, 2));
    ASSERT_EQ(r.score.chords.size(), 1u);
    EXPECT_EQ(r.score.chords[0].quality, ChordQuality::major);
    EXPECT_EQ(r.score.key, (KeySignature{0, Mode::major}));
    EXPECT_EQ(r.score.label, Label::composer);
}

TEST(ScoreText, DecimalBeats) {
    auto doc = nlohmann::json::parse(kOneNoteDoc);
    doc["notes"][0]["onset"] = 0.375;
    doc["notes"][0]["duration"] = "0.25";
    const auto s = parse_score_text(doc.dump()).score;
    EXPECT_EQ(s.notes[0].onset, Beat(3, 8));
    EXPECT_EQ(s.notes[0].duration, Beat(1, 4));
    doc["notes"][0]["onset"] = 0.01;  // needs a denominator of 100
    EXPECT_EQ(kind_of([&] { parse_score_text(doc.dump()); }), ErrorKind::SchemaError);
}

TEST(ScoreText, PitchOutOfRange) {
    auto doc = nlohmann::json::parse(kOneNoteDoc);
    doc["notes"][0]["pitch"] = 200;
    EXPECT_EQ(kind_of([&] { parse_score_text(doc.dump()); }), ErrorKind::RangeError);
}

TEST(ScoreText, ChordsOutOfOrder) {
    auto doc = nlohmann::json::parse(kOneNoteDoc);
    doc["chords"] = nlohmann::json::parse(R"([{"onset": 4, "root": 0, "quality": "major"},
                                              {"onset": 0, "root": 7, "quality": "major"}])");
    EXPECT_EQ(kind_of([&] { parse_score_text(doc.dump()); }), ErrorKind::OrderError);
}

TEST(ScoreText, MissingField) {
    auto doc = nlohmann::json::parse(kOneNoteDoc);
    doc.erase("key");
    EXPECT_EQ(kind_of([&] { parse_score_text(doc.dump()); }), ErrorKind::SchemaError);
    EXPECT_EQ(kind_of([&] { parse_score_text("{not json"); }), ErrorKind::SchemaError);
}

TEST(ScoreText, RoundTripOverRandomScores) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto s = birkhoff::testing::random_score(seed);
        if (seed % 2) s.label = Label::ai;
        const auto text = serialize_score_text(s);
        const auto back = parse_score_text(text).score;
        ASSERT_EQ(back, s) << seed;
        ASSERT_EQ(serialize_score_text(back), text);
    }
}

TEST(Validate, Examples) {
    const auto good = make_score({note(0, 1, 60), note(1, 1, 62)});
    EXPECT_TRUE(validate_score(good).empty());
    Score unsorted = good;
    std::swap(unsorted.notes[0], unsorted.notes[1]);
    EXPECT_EQ(validate_score(unsorted), std::vector<Violation>{Violation::NotesUnsorted});
    EXPECT_EQ(validate_score(Score{}), std::vector<Violation>{Violation::EmptyScore});
}

TEST(Files, MidiWithSidecar) {
    const auto dir = std::filesystem::temp_directory_path() / "birkhoff_ingest_test";
    std::filesystem::create_directories(dir);
    auto s = birkhoff::testing::random_score(11, 4);
    const auto bytes = encode_smf(s);
    {
        std::ofstream out(dir / "song.mid", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        std::ofstream side(dir / "song.chords.json");
        side << chord_sidecar_text(s);
    }
    const auto r = load_score_file(dir / "song.mid");
    EXPECT_EQ(r.score.id, "song");
    EXPECT_EQ(r.score.chords, s.chords);
    EXPECT_EQ(r.score.notes, s.notes);
    std::filesystem::remove_all(dir);
}

TEST(Files, MissingFileIsIoError) {
    EXPECT_EQ(kind_of([] { load_score_file("/nonexistent/x.score.json"); }), ErrorKind::IoError);
}
