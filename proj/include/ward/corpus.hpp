#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ward/csv.hpp"
#include "ward/segmenter.hpp"

namespace ward::corpus {

struct PatientAdmissionSummary {
    std::string gender;
    std::string race;
    int age_years = 0;
    std::vector<std::string> diagnoses;
    std::vector<std::string> transfer_summary;  // chronological, "<intime> <careunit>"
    double stay_duration_hours = 0.0;
};

struct DischargeRecord {
    std::string hadm_id;
    std::string text;
    std::optional<PatientAdmissionSummary> admission;
    std::vector<std::string> radiology_notes;
};

enum class Split { train, validation, test };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct Corpus {
    std::vector<DischargeRecord> records;
    Split split_label = Split::train;

    const DischargeRecord* find(std::string_view hadm_id) const;
};

// Logical-field to column-name mapping per auxiliary table, so the loader
// also runs on renamed exports. Defaults follow the MIMIC-IV hosp schema.
struct AuxMapping {
    std::map<std::string, std::map<std::string, std::string>> tables;

    static AuxMapping defaults();
    static AuxMapping from_json(std::string_view json_text);
    const std::string& column(const std::string& table, const std::string& field) const;
};

struct AuxTables {
    AuxMapping mapping = AuxMapping::defaults();
    std::optional<CsvTable> patients;
    std::optional<CsvTable> admissions;
    std::optional<CsvTable> diagnoses;
    std::optional<CsvTable> transfers;
    std::optional<CsvTable> radiology;

    // Row indices rebuilt by finalize(); keyed by hadm_id (patients by subject_id).
    std::map<std::string, std::size_t> admissions_by_hadm;
    std::map<std::string, std::size_t> patients_by_subject;
    std::map<std::string, std::vector<std::size_t>> diagnoses_by_hadm;
    std::map<std::string, std::vector<std::size_t>> transfers_by_hadm;
    std::map<std::string, std::vector<std::size_t>> radiology_by_hadm;

    void finalize();
};

AuxTables load_aux_tables(const std::map<std::string, std::string>& paths,
                          AuxMapping mapping = AuxMapping::defaults());

struct LoadStats {
    std::size_t rows_total = 0;
    std::size_t skipped_empty_text = 0;
};

Corpus load_corpus(const std::string& discharge_path, const AuxTables* aux = nullptr,
                   LoadStats* stats = nullptr);

PatientAdmissionSummary aggregate_patient_context(const std::string& record_id, const AuxTables& aux);

// Fills sections["imaging_and_studies"] from radiology notes when the letter
// has no imaging content of its own. Only the merged section view changes;
// raw segments (and so reconstruct()) stay untouched.
segmenter::SectionedLetter backfill_imaging(segmenter::SectionedLetter sectioned,
                                            const std::vector<std::string>& radiology_notes);

// "YYYY-MM-DD HH:MM:SS" (time part optional) to epoch seconds, no timezone.
std::optional<std::int64_t> parse_timestamp(std::string_view s);
std::string format_timestamp(std::int64_t epoch_s);

std::string render_patient_admissions(const PatientAdmissionSummary& admission);

// Section body by canonical name, falling back to admission-derived renderings
// for patient_admissions, diagnoses, and transfer_summary when the letter
// lacks them. Returns absent when nothing is available.
std::optional<std::string> section_text_or_aux(const segmenter::SectionedLetter& sectioned,
                                               const std::optional<PatientAdmissionSummary>& admission,
                                               std::string_view canonical_name);

struct SyntheticCorpus {
    Corpus corpus;
    AuxTables aux;
    std::map<std::string, std::string> gold_bhc;
    std::map<std::string, std::string> gold_di;
};

// Records are generated in twin pairs that share chief complaint, diagnoses,
// and the other retrieval-context sections, with near-duplicate target
// sections, so similarity search has structure to find. Target word counts
// are functions of chief complaint and diagnoses only.
SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n);

void write_synthetic_fixture(const SyntheticCorpus& synth, const std::string& dir);

void save_corpus_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_corpus_jsonl(const std::string& path, Split split = Split::train);

// Per-record segmentation, index-aligned with corpus.records. Parallel.
std::vector<segmenter::SectionedLetter> segment_corpus(const Corpus& corpus,
                                                       const std::vector<segmenter::SectionSpec>& specs);

// canonical_name -> [(hadm_id, trimmed body)] over every record, appearance
// per record driven by the merged section view.
segmenter::CorpusSections collect_sections(const Corpus& corpus,
                                           const std::vector<segmenter::SectionedLetter>& letters);

// Caps every merged section body at its per-section length percentile,
// editing the letters in place. Raw segments are left alone.
void truncate_letters(const Corpus& corpus, std::vector<segmenter::SectionedLetter>& letters,
                      double percentile = 95.0);

}  // namespace ward::corpus
