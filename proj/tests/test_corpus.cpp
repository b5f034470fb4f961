#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/csv.hpp"
#include "ward/error.hpp"
#include "ward/rng.hpp"
#include "ward/segmenter.hpp"
#include "ward/text.hpp"

using namespace ward;
using namespace ward::corpus;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ward_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

template <typename Fn>
ErrorKind thrown_kind(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected ward::Error");
    return ErrorKind::validation;
}

// Epoch days via the Julian day number formula, deliberately a different
// algorithm from the one in the library.
long long jdn_epoch_seconds(int y, int mo, int d, int h, int mi, int s) {
    long long a = (14 - mo) / 12;
    long long yy = y + 4800 - a;
    long long mm = mo + 12 * a - 3;
    long long jdn = d + (153 * mm + 2) / 5 + 365 * yy + yy / 4 - yy / 100 + yy / 400 - 32045;
    return (jdn - 2440588) * 86400LL + h * 3600LL + mi * 60LL + s;
}

long long oracle_parse(const std::string& ts) {
    int y, mo, d, h = 0, mi = 0, s = 0;
    if (ts.size() > 10) REQUIRE(std::sscanf(ts.c_str(), "%d-%d-%d %d:%d:%d", &y, &mo, &d, &h, &mi, &s) == 6);
    else REQUIRE(std::sscanf(ts.c_str(), "%d-%d-%d", &y, &mo, &d) == 3);
    return jdn_epoch_seconds(y, mo, d, h, mi, s);
}

double sample_skewness(const std::vector<double>& xs) {
    double n = static_cast<double>(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0, m3 = 0;
    for (double x : xs) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    return m3 / std::pow(m2, 1.5);
}

void write(const fs::path& p, const std::string& content) { atomic_write_file(p, content); }

}  // namespace

TEST_CASE("load_corpus minimal csv without aux") {
    TempDir tmp;
    write(tmp.path / "discharge.csv",
          "hadm_id,text,note_id\n100,\"letter one\",n1\n101,\"letter two\",n2\n102,three,n3\n");
    LoadStats stats;
    Corpus c = load_corpus((tmp.path / "discharge.csv").string(), nullptr, &stats);
    REQUIRE(c.records.size() == 3);
    CHECK(stats.rows_total == 3);
    CHECK(stats.skipped_empty_text == 0);
    CHECK(c.records[0].hadm_id == "100");
    CHECK(c.records[1].text == "letter two");
    CHECK(!c.records[0].admission.has_value());
    CHECK(c.find("102") != nullptr);
    CHECK(c.find("999") == nullptr);
}

TEST_CASE("load_corpus schema and validation errors") {
    TempDir tmp;
    write(tmp.path / "no_text.csv", "hadm_id,body\n1,x\n");
    try {
        load_corpus((tmp.path / "no_text.csv").string());
        FAIL("expected schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::schema);
        CHECK(std::string(e.what()).find("text") != std::string::npos);
    }

    write(tmp.path / "dup.csv", "hadm_id,text\n7,a\n8,b\n7,c\n");
    try {
        load_corpus((tmp.path / "dup.csv").string());
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }

    CHECK(thrown_kind([&] { load_corpus((tmp.path / "missing.csv").string()); }) == ErrorKind::io);
}

TEST_CASE("load_corpus skips empty text rows and counts them") {
    TempDir tmp;
    write(tmp.path / "discharge.csv", "hadm_id,text\n1,hello\n2,\"\"\n3,\"  \"\n4,world\n");
    LoadStats stats;
    Corpus c = load_corpus((tmp.path / "discharge.csv").string(), nullptr, &stats);
    CHECK(c.records.size() == 2);
    CHECK(stats.rows_total == 4);
    CHECK(stats.skipped_empty_text == 2);
}

TEST_CASE("aggregate_patient_context age and stay arithmetic") {
    AuxTables aux;
    aux.patients = CsvTable{{"subject_id", "gender", "anchor_age", "anchor_year"},
                            {{"s1", "F", "50", "2010"}}};
    aux.admissions = CsvTable{{"hadm_id", "subject_id", "admittime", "dischtime", "race"},
                              {{"h1", "s1", "2014-03-02 08:00:00", "2014-03-06 08:00:00", "WHITE"}}};
    aux.finalize();
    auto s = aggregate_patient_context("h1", aux);
    CHECK(s.age_years == 54);
    CHECK(s.gender == "F");
    CHECK(s.race == "WHITE");
    CHECK(s.stay_duration_hours == doctest::Approx(96.0));
    CHECK(s.diagnoses.empty());
    CHECK(s.transfer_summary.empty());

    SUBCASE("zero length stay") {
        aux.admissions->rows[0][3] = "2014-03-02 08:00:00";
        aux.finalize();
        CHECK(aggregate_patient_context("h1", aux).stay_duration_hours == doctest::Approx(0.0));
    }
    SUBCASE("age clamps at 150") {
        aux.patients->rows[0][2] = "89";
        aux.admissions->rows[0][2] = "2099-01-01 00:00:00";
        aux.admissions->rows[0][3] = "2099-01-02 00:00:00";
        aux.finalize();
        CHECK(aggregate_patient_context("h1", aux).age_years == 150);
    }
    SUBCASE("discharge before admission rejected") {
        aux.admissions->rows[0][3] = "2014-03-01 08:00:00";
        aux.finalize();
        CHECK(thrown_kind([&] { aggregate_patient_context("h1", aux); }) == ErrorKind::validation);
    }
    SUBCASE("unknown hadm_id") {
        CHECK(thrown_kind([&] { aggregate_patient_context("zz", aux); }) == ErrorKind::not_found);
    }
    SUBCASE("bad timestamp cites the record") {
        aux.admissions->rows[0][2] = "not a time";
        aux.finalize();
        try {
            aggregate_patient_context("h1", aux);
            FAIL("expected validation error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::validation);
            CHECK(std::string(e.what()).find("h1") != std::string::npos);
        }
    }
}

TEST_CASE("transfers sorted chronologically regardless of row order") {
    AuxTables aux;
    aux.patients = CsvTable{{"subject_id", "gender", "anchor_age", "anchor_year"},
                            {{"s1", "M", "40", "2012"}}};
    aux.admissions = CsvTable{{"hadm_id", "subject_id", "admittime", "dischtime", "race"},
                              {{"h1", "s1", "2013-01-01 00:00:00", "2013-01-03 00:00:00", "ASIAN"}}};
    aux.transfers = CsvTable{{"hadm_id", "careunit", "intime"},
                             {{"h1", "MICU", "2013-01-02 04:00:00"},
                              {"h1", "Emergency Department", "2013-01-01 01:00:00"},
                              {"h1", "Medicine", "2013-01-01 09:30:00"}}};
    aux.finalize();
    auto s = aggregate_patient_context("h1", aux);
    REQUIRE(s.transfer_summary.size() == 3);

    std::vector<std::pair<long long, std::string>> oracle;
    for (const auto& row : aux.transfers->rows) oracle.emplace_back(oracle_parse(row[2]), row[2] + " " + row[1]);
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.transfer_summary[i] == oracle[i].second);
}

TEST_CASE("diagnoses keep table order") {
    AuxTables aux;
    aux.patients = CsvTable{{"subject_id", "gender", "anchor_age", "anchor_year"},
                            {{"s1", "F", "30", "2011"}}};
    aux.admissions = CsvTable{{"hadm_id", "subject_id", "admittime", "dischtime", "race"},
                              {{"h1", "s1", "2012-06-01", "2012-06-02", "OTHER"}}};
    aux.diagnoses = CsvTable{{"hadm_id", "long_title"},
                             {{"h1", "Zeta condition"}, {"h2", "Other patient"}, {"h1", "Alpha condition"}}};
    aux.finalize();
    auto s = aggregate_patient_context("h1", aux);
    REQUIRE(s.diagnoses.size() == 2);
    CHECK(s.diagnoses[0] == "Zeta condition");
    CHECK(s.diagnoses[1] == "Alpha condition");
}

TEST_CASE("timestamp parse and format") {
    auto t = parse_timestamp("2014-03-02 08:15:30");
    REQUIRE(t.has_value());
    CHECK(format_timestamp(*t) == "2014-03-02 08:15:30");
    CHECK(*parse_timestamp("2014-03-02") == *parse_timestamp("2014-03-02 00:00:00"));
    CHECK(!parse_timestamp("").has_value());
    CHECK(!parse_timestamp("2014/03/02").has_value());
    CHECK(!parse_timestamp("2014-13-02 00:00:00").has_value());
    CHECK(!parse_timestamp("garbage").has_value());

    Rng rng(99);
    for (int i = 0; i < 500; ++i) {
        int y = 1990 + static_cast<int>(rng.bounded(120));
        int mo = 1 + static_cast<int>(rng.bounded(12));
        int d = 1 + static_cast<int>(rng.bounded(28));
        int h = static_cast<int>(rng.bounded(24));
        int mi = static_cast<int>(rng.bounded(60));
        int s = static_cast<int>(rng.bounded(60));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, mo, d, h, mi, s);
        auto parsed = parse_timestamp(buf);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == jdn_epoch_seconds(y, mo, d, h, mi, s));
        CHECK(format_timestamp(*parsed) == buf);
    }
}

TEST_CASE("backfill_imaging branches and idempotence") {
    const auto& specs = segmenter::default_section_specs();
    auto with_imaging = segmenter::segment("Imaging and Studies:\nCT normal\n", specs);
    auto same = backfill_imaging(with_imaging, {"CXR: clear"});
    CHECK(*same.find("imaging_and_studies") == "CT normal");

    auto empty_imaging = segmenter::segment("Imaging and Studies:\n\nService: X\n", specs);
    auto filled = backfill_imaging(empty_imaging, {"CXR: clear"});
    CHECK(*filled.find("imaging_and_studies") == "CXR: clear");

    auto absent = segmenter::segment("Service: X\n", specs);
    auto added = backfill_imaging(absent, {"CXR: clear", "MRI: unremarkable"});
    REQUIRE(added.has("imaging_and_studies"));
    CHECK(*added.find("imaging_and_studies") == "CXR: clear\nMRI: unremarkable");
    CHECK(added.reconstruct() == "Service: X\n");

    auto twice = backfill_imaging(added, {"CXR: clear", "MRI: unremarkable"});
    CHECK(twice.sections == added.sections);

    auto no_notes = backfill_imaging(absent, {});
    CHECK(!no_notes.has("imaging_and_studies"));
}

TEST_CASE("aux mapping overrides and rejects unknown keys") {
    auto m = AuxMapping::from_json(R"({"patients": {"gender": "sex"}})");
    CHECK(m.column("patients", "gender") == "sex");
    CHECK(m.column("patients", "anchor_age") == "anchor_age");
    CHECK(thrown_kind([] { AuxMapping::from_json(R"({"bogus": {}})"); }) == ErrorKind::schema);
    CHECK(thrown_kind([] { AuxMapping::from_json(R"({"patients": {"bogus": "x"}})"); }) == ErrorKind::schema);
    CHECK(thrown_kind([] { AuxMapping::from_json("[]"); }) == ErrorKind::schema);
}

TEST_CASE("synthetic corpus is deterministic per seed") {
    auto a = generate_synthetic_corpus(7, 10);
    auto b = generate_synthetic_corpus(7, 10);
    REQUIRE(a.corpus.records.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(a.corpus.records[i].hadm_id == b.corpus.records[i].hadm_id);
        CHECK(a.corpus.records[i].text == b.corpus.records[i].text);
    }
    CHECK(a.gold_bhc == b.gold_bhc);
    CHECK(a.gold_di == b.gold_di);

    auto c = generate_synthetic_corpus(8, 10);
    bool any_diff = false;
    for (std::size_t i = 0; i < 10; ++i)
        if (a.corpus.records[i].text != c.corpus.records[i].text) any_diff = true;
    CHECK(any_diff);

    CHECK(thrown_kind([] { generate_synthetic_corpus(1, 0); }) == ErrorKind::validation);
}

TEST_CASE("synthetic letters segment back into the full section set") {
    auto synth = generate_synthetic_corpus(21, 30);
    const auto& specs = segmenter::default_section_specs();
    for (const auto& rec : synth.corpus.records) {
        auto letter = segmenter::segment(rec.text, specs);
        CHECK(letter.sections.size() == specs.size());
        for (const auto& spec : specs) {
            const std::string* body = letter.find(spec.canonical_name);
            REQUIRE_MESSAGE(body != nullptr, spec.canonical_name);
            CHECK_MESSAGE(!body->empty(), spec.canonical_name);
        }
        CHECK(letter.reconstruct() == rec.text);
        auto targets = segmenter::extract_targets(letter);
        REQUIRE(targets.bhc.has_value());
        REQUIRE(targets.di.has_value());
        CHECK(*targets.bhc == synth.gold_bhc.at(rec.hadm_id));
        CHECK(*targets.di == synth.gold_di.at(rec.hadm_id));
    }
}

TEST_CASE("synthetic twins share retrieval context and have close targets") {
    auto synth = generate_synthetic_corpus(13, 40);
    const auto& specs = segmenter::default_section_specs();
    for (std::size_t i = 0; i + 1 < 40; i += 2) {
        auto a = segmenter::segment(synth.corpus.records[i].text, specs);
        auto b = segmenter::segment(synth.corpus.records[i + 1].text, specs);
        CHECK(*a.find("chief_complaint") == *b.find("chief_complaint"));
        CHECK(*a.find("history_of_present_illness") == *b.find("history_of_present_illness"));
        CHECK(*a.find("discharge_medications") == *b.find("discharge_medications"));
        CHECK(*a.find("discharge_disposition") == *b.find("discharge_disposition"));
        // Twin diagnoses differ by at most the appended comorbidity.
        const std::string& dxa = *a.find("diagnoses");
        const std::string& dxb = *b.find("diagnoses");
        CHECK(dxb.substr(0, dxa.size()) == dxa);

        double wa = static_cast<double>(segmenter::word_count(synth.gold_bhc.at(synth.corpus.records[i].hadm_id)));
        double wb = static_cast<double>(segmenter::word_count(synth.gold_bhc.at(synth.corpus.records[i + 1].hadm_id)));
        CHECK(std::abs(wa - wb) <= 60.0);
        CHECK(std::abs(wa - wb) <= 0.5 * std::max(wa, wb));
    }
}

TEST_CASE("synthetic target lengths are right-skewed") {
    auto synth = generate_synthetic_corpus(3, 1000);
    std::vector<double> bhc_words, di_words;
    for (const auto& [id, body] : synth.gold_bhc)
        bhc_words.push_back(static_cast<double>(segmenter::word_count(body)));
    for (const auto& [id, body] : synth.gold_di)
        di_words.push_back(static_cast<double>(segmenter::word_count(body)));
    CHECK(sample_skewness(bhc_words) > 0.5);
    CHECK(sample_skewness(di_words) > 0.5);
}

TEST_CASE("synthetic admissions match an independent join over the aux tables") {
    auto synth = generate_synthetic_corpus(17, 50);
    const auto& aux = synth.aux;
    REQUIRE(aux.patients);
    REQUIRE(aux.admissions);

    std::map<std::string, std::vector<std::string>> adm_by_hadm;
    for (const auto& row : aux.admissions->rows) adm_by_hadm[row[0]] = row;
    std::map<std::string, std::vector<std::string>> pat_by_subject;
    for (const auto& row : aux.patients->rows) pat_by_subject[row[0]] = row;

    for (const auto& rec : synth.corpus.records) {
        REQUIRE(rec.admission.has_value());
        const auto& adm_row = adm_by_hadm.at(rec.hadm_id);
        const auto& pat_row = pat_by_subject.at(adm_row[1]);
        long long admit = oracle_parse(adm_row[2]);
        long long disch = oracle_parse(adm_row[3]);
        int admit_year = std::stoi(adm_row[2].substr(0, 4));
        int expect_age = std::stoi(pat_row[2]) + (admit_year - std::stoi(pat_row[3]));
        CHECK(rec.admission->age_years == std::clamp(expect_age, 0, 150));
        CHECK(rec.admission->gender == pat_row[1]);
        CHECK(rec.admission->race == adm_row[4]);
        CHECK(rec.admission->stay_duration_hours ==
              doctest::Approx(static_cast<double>(disch - admit) / 3600.0));

        std::vector<std::pair<long long, std::string>> moves;
        for (const auto& row : aux.transfers->rows)
            if (row[0] == rec.hadm_id) moves.emplace_back(oracle_parse(row[2]), row[2] + " " + row[1]);
        std::sort(moves.begin(), moves.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        REQUIRE(rec.admission->transfer_summary.size() == moves.size());
        for (std::size_t i = 0; i < moves.size(); ++i)
            CHECK(rec.admission->transfer_summary[i] == moves[i].second);

        std::vector<std::string> dx;
        for (const auto& row : aux.diagnoses->rows)
            if (row[0] == rec.hadm_id) dx.push_back(row[1]);
        CHECK(rec.admission->diagnoses == dx);
    }
}

TEST_CASE("fixture round-trip through csv files") {
    TempDir tmp;
    auto synth = generate_synthetic_corpus(29, 12);
    write_synthetic_fixture(synth, tmp.path.string());
    for (const char* name : {"discharge.csv", "patients.csv", "admissions.csv", "diagnoses.csv",
                             "transfers.csv", "radiology.csv", "gold.jsonl"})
        CHECK(fs::exists(tmp.path / name));

    auto aux = load_aux_tables({{"patients", (tmp.path / "patients.csv").string()},
                                {"admissions", (tmp.path / "admissions.csv").string()},
                                {"diagnoses", (tmp.path / "diagnoses.csv").string()},
                                {"transfers", (tmp.path / "transfers.csv").string()},
                                {"radiology", (tmp.path / "radiology.csv").string()}});
    LoadStats stats;
    Corpus loaded = load_corpus((tmp.path / "discharge.csv").string(), &aux, &stats);
    REQUIRE(loaded.records.size() == synth.corpus.records.size());
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        const auto& a = loaded.records[i];
        const auto& b = synth.corpus.records[i];
        CHECK(a.hadm_id == b.hadm_id);
        CHECK(a.text == b.text);
        REQUIRE(a.admission.has_value());
        CHECK(a.admission->age_years == b.admission->age_years);
        CHECK(a.admission->gender == b.admission->gender);
        CHECK(a.admission->diagnoses == b.admission->diagnoses);
        CHECK(a.admission->transfer_summary == b.admission->transfer_summary);
        CHECK(a.radiology_notes == b.radiology_notes);
    }
}

TEST_CASE("jsonl round-trip preserves records") {
    TempDir tmp;
    auto synth = generate_synthetic_corpus(31, 8);
    auto path = (tmp.path / "corpus.jsonl").string();
    save_corpus_jsonl(synth.corpus, path);
    Corpus loaded = load_corpus_jsonl(path, Split::validation);
    CHECK(loaded.split_label == Split::validation);
    REQUIRE(loaded.records.size() == synth.corpus.records.size());
    std::multiset<std::pair<std::string, std::string>> orig, round;
    for (const auto& r : synth.corpus.records) orig.insert({r.hadm_id, r.text});
    for (const auto& r : loaded.records) round.insert({r.hadm_id, r.text});
    CHECK(orig == round);
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        REQUIRE(loaded.records[i].admission.has_value());
        CHECK(loaded.records[i].admission->stay_duration_hours ==
              synth.corpus.records[i].admission->stay_duration_hours);
        CHECK(loaded.records[i].radiology_notes == synth.corpus.records[i].radiology_notes);
    }

    SUBCASE("corrupt line rejected") {
        write(tmp.path / "bad.jsonl", "{\"hadm_id\": \"1\"}\n");
        CHECK(thrown_kind([&] { load_corpus_jsonl((tmp.path / "bad.jsonl").string()); }) ==
              ErrorKind::schema);
        write(tmp.path / "notjson.jsonl", "nope\n");
        CHECK(thrown_kind([&] { load_corpus_jsonl((tmp.path / "notjson.jsonl").string()); }) ==
              ErrorKind::schema);
    }
}

TEST_CASE("segment_corpus matches per-record segmentation") {
    auto synth = generate_synthetic_corpus(37, 25);
    const auto& specs = segmenter::default_section_specs();
    auto letters = segment_corpus(synth.corpus, specs);
    REQUIRE(letters.size() == 25);
    for (std::size_t i = 0; i < letters.size(); ++i) {
        auto serial = segmenter::segment(synth.corpus.records[i].text, specs);
        CHECK(letters[i].sections == serial.sections);
        CHECK(letters[i].unmatched_prefix == serial.unmatched_prefix);
    }
    auto collected = collect_sections(synth.corpus, letters);
    CHECK(collected.at("chief_complaint").size() == 25);
    CHECK(collected.at("brief_hospital_course").size() == 25);
}

TEST_CASE("section_text_or_aux falls back to admission data") {
    auto synth = generate_synthetic_corpus(41, 2);
    const auto& rec = synth.corpus.records[0];
    auto letter = segmenter::segment("Service: X\n", segmenter::default_section_specs());
    auto pa = section_text_or_aux(letter, rec.admission, "patient_admissions");
    REQUIRE(pa.has_value());
    CHECK(pa->find("Gender:") != std::string::npos);
    CHECK(pa->find("Age:") != std::string::npos);
    auto dx = section_text_or_aux(letter, rec.admission, "diagnoses");
    REQUIRE(dx.has_value());
    CHECK(*dx == ward::join(rec.admission->diagnoses, "\n"));
    CHECK(!section_text_or_aux(letter, rec.admission, "physical_exam").has_value());
    CHECK(!section_text_or_aux(letter, std::nullopt, "patient_admissions").has_value());
    auto direct = section_text_or_aux(letter, rec.admission, "service");
    REQUIRE(direct.has_value());
    CHECK(*direct == "X");
}
