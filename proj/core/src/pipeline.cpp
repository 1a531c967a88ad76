#include "lsd/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "lsd/binary_io.hpp"
#include "lsd/csv.hpp"
#include "lsd/error.hpp"
#include "lsd/image_io.hpp"
#include "lsd/mnist.hpp"
#include "lsd/operators.hpp"
#include "lsd/spectral.hpp"
#include "lsd/training.hpp"

namespace lsd::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;

namespace {

struct Stage {
    const RunConfig& cfg;
    const Log& log;
    config::DirectoryLock lock;

    Stage(const RunConfig& c, const Log& l, std::string_view name) : cfg(c), log(l), lock(c.out_dir) {
        cfg.validate();
        const std::string resolved = cfg.resolved();
        io::write_text(cfg.out_dir / (std::string(name) + ".config.txt"), resolved);
        say(std::string(name) + ": resolved config\n" + resolved);
    }

    void say(std::string_view msg) const {
        if (log) log(msg);
    }
    fs::path out(std::string_view name) const { return cfg.out_dir / std::string(name); }

    fs::path need(std::string_view name, std::string_view producer) const {
        const fs::path p = out(name);
        if (!fs::exists(p)) {
            throw Error("missing " + p.string() + ": run " + std::string(producer) + " first");
        }
        return p;
    }

    models::Model load(std::string_view name, std::string_view producer) const {
        return models::load_checkpoint(need(name, producer));
    }
    basis::QuasiEigenBasis load_basis() const { return basis::load_basis(need(artifact::basis, "build-basis")); }

    data::MnistDataset train() const { return data::load_mnist_split(cfg.data_dir, data::Split::train).head(cfg.train_limit); }
    data::MnistDataset test() const { return data::load_mnist_split(cfg.data_dir, data::Split::test).head(cfg.test_limit); }

    training::ProgressFn progress() const {
        return [this](std::string_view m) { say(m); };
    }
};

void stamp(models::Model& m, const RunConfig& cfg) {
    m.seed = cfg.seed;
    m.hyperparameters["batch_size"] = std::to_string(cfg.batch_size);
    m.hyperparameters["latent_dim"] = std::to_string(cfg.latent_dim);
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
    std::vector<std::string> header{"row"};
    for (Eigen::Index c = 0; c < m.cols(); ++c) header.push_back(std::to_string(c));
    io::CsvWriter w(header);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<std::string> cells{std::to_string(r)};
        for (Eigen::Index c = 0; c < m.cols(); ++c) cells.push_back(io::format_number(m(r, c)));
        w.add_row(cells);
    }
    w.save(path);
}

TensorF to_float_rows(const Eigen::MatrixXd& m) {
    TensorF out = TensorF::matrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = static_cast<float>(m(r, c));
    }
    return out;
}

void write_histograms(const fs::path& path, const std::vector<basis::LabelHistogram>& hists) {
    io::CsvWriter w({"label", "bin_center", "density", "normal_pdf"});
    for (const auto& h : hists) {
        for (std::size_t b = 0; b < h.centers.size(); ++b) w.row(h.label, h.centers[b], h.density[b], h.normal_pdf[b]);
    }
    w.save(path);
}

std::string fmt(double v) { return io::format_number(v); }

}  // namespace

void write_means(const fs::path& path, std::span<const basis::MeanVector> means) {
    if (means.empty()) throw DataError("no mean vectors to write");
    std::vector<std::string> header{"label", "set_index"};
    for (std::size_t c = 0; c < means.front().values.size(); ++c) header.push_back("v" + std::to_string(c));
    io::CsvWriter w(header);
    for (const auto& m : means) {
        std::vector<std::string> cells{std::to_string(m.key.label), std::to_string(m.key.set_index)};
        for (double v : m.values) cells.push_back(fmt(v));
        w.add_row(cells);
    }
    w.save(path);
}

std::vector<basis::MeanVector> read_means(const fs::path& path) {
    const auto table = io::read_csv(path);
    if (table.header.size() < 3) throw FormatError("'" + path.string() + "' has no vector columns");
    std::vector<basis::MeanVector> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        basis::MeanVector m;
        m.key.label = static_cast<std::size_t>(table.number(r, "label"));
        m.key.set_index = static_cast<std::size_t>(table.number(r, "set_index"));
        for (std::size_t c = 2; c < table.header.size(); ++c) m.values.push_back(table.number(r, table.header[c]));
        out.push_back(std::move(m));
    }
    return out;
}

void train_gan(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "train-gan");
    const auto train = s.train();
    SeededRng rng = SeededRng::derive(cfg.seed, "train-gan");
    auto run = training::train_gan(train.images, cfg.train_config(cfg.gan_epochs), rng, s.progress());
    stamp(run.generator, cfg);
    stamp(run.discriminator, cfg);
    models::save_checkpoint(run.generator, s.out(artifact::generator));
    models::save_checkpoint(run.discriminator, s.out(artifact::discriminator));

    io::CsvWriter w({"epoch", "loss_discriminator", "loss_generator"});
    for (const auto& e : run.history) w.row(e.epoch, e.loss_discriminator, e.loss_generator);
    w.save(s.out("gan_loss.csv"));

    SeededRng zrng = SeededRng::derive(cfg.seed, "gan-samples");
    const TensorF z = zrng.normal_tensor<float>(100, cfg.latent_dim);
    io::write_image_grid(models::generate(run.generator, z), 10, 10, s.out("gan_samples.pgm"));
}

void train_classifier(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "train-classifier");
    const auto train = s.train();
    const auto test = s.test();
    SeededRng rng = SeededRng::derive(cfg.seed, "train-classifier");
    auto run = training::train_classifier(train.images, train.labels, cfg.train_config(cfg.classifier_epochs), rng,
                                          s.progress());
    stamp(run.classifier, cfg);
    models::save_checkpoint(run.classifier, s.out(artifact::classifier));

    io::CsvWriter w({"epoch", "loss", "train_accuracy"});
    for (const auto& e : run.history) w.row(e.epoch, e.loss, e.train_accuracy);
    w.save(s.out("classifier_loss.csv"));

    io::CsvWriter eval({"split", "accuracy"});
    eval.row("train", training::classifier_accuracy(run.classifier, train.images, train.labels));
    const double test_acc = training::classifier_accuracy(run.classifier, test.images, test.labels);
    eval.row("test", test_acc);
    eval.save(s.out(artifact::classifier_eval));
    s.say("classifier test accuracy " + fmt(test_acc));
}

void train_encoder(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "train-encoder");
    const auto g = s.load(artifact::generator, "train-gan");
    const auto c = s.load(artifact::classifier, "train-classifier");
    const auto train = s.train();
    SeededRng rng = SeededRng::derive(cfg.seed, "train-encoder");
    auto run = training::train_encoder(train.images, train.labels, g, c, cfg.train_config(cfg.encoder_epochs), rng,
                                       s.progress());
    stamp(run.encoder, cfg);
    run.encoder.hyperparameters["lambda"] = fmt(cfg.lambda);
    models::save_checkpoint(run.encoder, s.out(artifact::encoder));

    io::CsvWriter w({"epoch", "loss", "kl", "recon", "classification"});
    for (const auto& e : run.history) w.row(e.epoch, e.loss, e.kl, e.recon, e.classification);
    w.save(s.out("encoder_loss.csv"));

    const auto test = s.test().head(10);
    SeededRng erng = SeededRng::derive(cfg.seed, "encoder-preview");
    const auto enc = models::encode(run.encoder, test.images, erng);
    io::write_image_grid(vstack(test.images, models::generate(g, enc.z)), 2, test.size(), s.out("encoder_preview.pgm"));
}

void build_basis(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "build-basis");
    const auto g = s.load(artifact::generator, "train-gan");
    const auto c = s.load(artifact::classifier, "train-classifier");
    const auto e = s.load(artifact::encoder, "train-encoder");
    if (g.spec.input_dim != cfg.latent_dim) {
        throw ConfigError("generator latent width " + std::to_string(g.spec.input_dim) + " != latent_dim " +
                          std::to_string(cfg.latent_dim));
    }
    const auto train = s.train();
    const std::size_t l = models::kLabelCount;
    const std::size_t n = cfg.resolved_sets();
    const std::size_t v = cfg.set_size;

    basis::SampledSetOptions opts;
    opts.min_probability = cfg.min_accept_probability;
    opts.window = cfg.sample_window;

    std::vector<basis::LatentSet> sets;
    for (const auto& key : basis::processing_order(l, n)) {
        if (key.set_index == 1) {
            SeededRng rng = SeededRng::derive(cfg.seed, "encoded-set", {key.label});
            sets.push_back(basis::collect_encoded_set(train.images, train.labels, e, g, c, key.label, v, rng));
        } else {
            SeededRng rng = SeededRng::derive(cfg.seed, "sampled-set", {key.label, key.set_index});
            sets.push_back(basis::collect_sampled_set(g, c, key.label, key.set_index, v, rng, opts));
        }
        s.say("set (" + std::to_string(key.label) + ", " + std::to_string(key.set_index) + ") collected");
    }

    std::vector<basis::MeanVector> means;
    for (const auto& set : sets) means.push_back(basis::average_set(set));
    const auto qb = basis::gram_schmidt(means, static_cast<double>(cfg.latent_dim));
    basis::save_basis(qb, s.out(artifact::basis));
    write_means(s.out(artifact::means), means);

    const Eigen::MatrixXd eta = basis::stack_means(means);
    const Eigen::MatrixXd gram_eta = basis::gram_matrix(eta);
    const Eigen::MatrixXd gram_xi = basis::gram_matrix(qb.vectors());
    write_matrix_csv(s.out("gram_eta.csv"), gram_eta);
    write_matrix_csv(s.out("gram_xi.csv"), gram_xi);
    io::write_pgm(s.out("gram_eta.pgm"), io::heatmap(gram_eta));
    io::write_pgm(s.out("gram_xi.pgm"), io::heatmap(gram_xi));

    std::vector<basis::LatentSet> encoded, sampled;
    for (const auto& set : sets) (set.key.set_index == 1 ? encoded : sampled).push_back(set);
    write_histograms(s.out("hist_encoded.csv"), basis::label_pdf_histograms(encoded, l));
    if (!sampled.empty()) write_histograms(s.out("hist_sampled.csv"), basis::label_pdf_histograms(sampled, l));

    std::vector<std::size_t> prefixes{std::max<std::size_t>(1, v / 4), std::max<std::size_t>(1, v / 2), v};
    prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());
    io::CsvWriter conv({"label", "set_index", "prefix", "mean_sem"});
    for (const auto& set : sets) {
        for (const auto& row : basis::convergence_check(set, prefixes)) {
            conv.row(set.key.label, set.key.set_index, row.prefix, row.mean_sem);
        }
    }
    conv.save(s.out(artifact::convergence));

    // Rows are labels, columns set members / set indices.
    const std::size_t show = std::min<std::size_t>(10, v);
    TensorF samples = TensorF::matrix(l * show, cfg.latent_dim);
    for (std::size_t a = 0; a < l; ++a) {
        const auto& vecs = sets[a].vectors;  // set 1 occupies the first l slots
        for (std::size_t j = 0; j < show; ++j) std::copy(vecs.row(j).begin(), vecs.row(j).end(), samples.row(a * show + j).begin());
    }
    io::write_image_grid(models::generate(g, samples), l, show, s.out("set_samples.pgm"));

    auto label_major = [&](const Eigen::MatrixXd& rows) {
        Eigen::MatrixXd out(rows.rows(), rows.cols());
        for (std::size_t k = 0; k < means.size(); ++k) {
            const auto& key = means[k].key;
            out.row(static_cast<Eigen::Index>(key.label * n + key.set_index - 1)) = rows.row(static_cast<Eigen::Index>(k));
        }
        return out;
    };
    const TensorF eta_img = models::generate(g, to_float_rows(label_major(eta)));
    io::write_image_grid(eta_img, l, n, s.out("eta_decoded.pgm"));
    io::write_image_grid(models::generate(g, to_float_rows(label_major(qb.vectors()))), l, n, s.out("xi_decoded.pgm"));

    const auto eta_cls = models::classify(c, models::generate(g, to_float_rows(eta)));
    io::CsvWriter check({"label", "set_index", "decoded_label", "confidence"});
    std::size_t agree = 0;
    for (std::size_t k = 0; k < means.size(); ++k) {
        const std::size_t lab = eta_cls.labels[k];
        agree += lab == means[k].key.label;
        check.row(means[k].key.label, means[k].key.set_index, lab, static_cast<double>(eta_cls.probabilities(k, lab)));
    }
    check.save(s.out("mean_labels.csv"));

    const Eigen::MatrixXd dev = gram_xi / qb.norm_constant() - Eigen::MatrixXd::Identity(gram_xi.rows(), gram_xi.cols());
    io::CsvWriter summary({"metric", "value"});
    summary.row("orthogonality_error", qb.orthogonality_error());
    summary.row("max_abs_gram_deviation", dev.cwiseAbs().maxCoeff());
    summary.row("mean_label_agreement", static_cast<double>(agree) / static_cast<double>(means.size()));
    summary.row("basis_id", std::to_string(qb.id()));
    summary.save(s.out("basis_summary.csv"));
    s.say("basis built: orthogonality error " + fmt(qb.orthogonality_error()));
}

void lsd_classify(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "lsd-classify");
    const auto qb = s.load_basis();
    const auto g = s.load(artifact::generator, "train-gan");
    const auto c = s.load(artifact::classifier, "train-classifier");
    const auto e = s.load(artifact::encoder, "train-encoder");
    const auto test = s.test();

    const auto ens = spectral::ensemble_accuracy(test.images, test.labels, cfg.trials, e, g, c, qb, cfg.seed);
    io::CsvWriter acc({"trial", "lsd_acc", "encdec_acc", "clf_acc"});
    for (const auto& t : ens.trials) acc.row(t.trial, t.lsd, t.encode_decode, t.classifier);
    acc.save(s.out(artifact::accuracy));

    const auto curve = spectral::cumulative_curve(ens.first_trial.truth_rank, qb.dim());
    io::CsvWriter cum({"n", "probability"});
    for (std::size_t i = 0; i < curve.size(); ++i) cum.row(i + 1, curve[i]);
    cum.save(s.out(artifact::cumulative));

    const auto prof = spectral::amplitude_rank_profiles(ens.first_trial);
    io::CsvWriter rows({"image_id", "truth_rank", "rank", "normalized_amplitude"});
    for (const auto& r : prof.rows) rows.row(r.image_id, r.truth_rank, r.rank, r.normalized_amplitude);
    rows.save(s.out(artifact::rank_profiles));
    io::CsvWriter pdfs({"truth_rank", "amplitude_rank", "bin_center", "density"});
    for (const auto& r : prof.pdfs) pdfs.row(r.truth_rank, r.amplitude_rank, r.bin_center, r.density);
    pdfs.save(s.out(artifact::rank_pdfs));

    const double images = static_cast<double>(test.size());
    io::CsvWriter summary({"metric", "value"});
    summary.row("test_images", test.size());
    summary.row("trials", cfg.trials);
    summary.row("lsd_accuracy_mean", ens.mean.lsd);
    summary.row("lsd_accuracy_std", ens.stddev.lsd);
    summary.row("encdec_accuracy_mean", ens.mean.encode_decode);
    summary.row("encdec_accuracy_std", ens.stddev.encode_decode);
    summary.row("classifier_accuracy", ens.mean.classifier);
    summary.row("top4_probability", curve[std::min<std::size_t>(4, curve.size()) - 1]);
    summary.row("set1_fraction", ens.first_trial.set1_fraction());
    for (std::size_t g = 0; g < prof.group_sizes.size(); ++g) {
        summary.row("truth_rank" + std::to_string(g + 1) + "_fraction", static_cast<double>(prof.group_sizes[g]) / images);
    }
    summary.save(s.out(artifact::lsd_summary));
    s.say("LSD accuracy " + fmt(ens.mean.lsd) + " +/- " + fmt(ens.stddev.lsd) + ", encode-decode " +
          fmt(ens.mean.encode_decode) + ", classifier " + fmt(ens.mean.classifier));
}

void denoise(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "denoise");
    const auto qb = s.load_basis();
    const auto g = s.load(artifact::generator, "train-gan");
    const auto c = s.load(artifact::classifier, "train-classifier");
    const auto e = s.load(artifact::encoder, "train-encoder");
    const auto test = s.test().head(cfg.denoise_count);

    spectral::DenoiseOptions opts{cfg.keep, cfg.renorm};
    SeededRng rng = SeededRng::derive(cfg.seed, "denoise");
    const TensorF strips = spectral::denoise(test.images, e, g, qb, rng, opts);
    const std::size_t per = 2 + cfg.keep.size();
    io::write_image_grid(strips, test.size(), per, s.out("denoise.pgm"));

    const auto cls = models::classify(c, strips);
    io::CsvWriter w({"image_id", "column", "components", "true_label", "classifier_label"});
    for (std::size_t i = 0; i < test.size(); ++i) {
        for (std::size_t j = 0; j < per; ++j) {
            const std::string comp = j == 0 ? "ground_truth" : j == 1 ? std::to_string(qb.dim()) : std::to_string(cfg.keep[j - 2]);
            w.row(i, j, comp, test.labels[i], cls.labels[i * per + j]);
        }
    }
    w.save(s.out("denoise.csv"));
}

void rotate(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "rotate");
    const auto qb = s.load_basis();
    const auto g = s.load(artifact::generator, "train-gan");
    const auto c = s.load(artifact::classifier, "train-classifier");
    const auto e = s.load(artifact::encoder, "train-encoder");
    const auto test = s.test();

    std::vector<std::size_t> zeros;
    for (std::size_t i = 0; i < test.size() && zeros.size() < cfg.rotate_count; ++i) {
        if (test.labels[i] == 0) zeros.push_back(i);
    }
    if (zeros.empty()) throw DataError("rotate: the test split holds no images of label 0");
    const TensorF start = test.images.gather_rows(zeros);

    ops::TrajectoryOptions opts;
    opts.steps_per_transition = cfg.steps;
    opts.dtheta = cfg.dtheta;
    SeededRng rng = SeededRng::derive(cfg.seed, "rotate");
    const auto traj = ops::rotate_trajectory(start, e, g, qb, rng, opts);
    io::write_image_grid(traj.images, traj.rows, traj.iterations, s.out("rotation.pgm"));

    const auto cls = models::classify(c, traj.images);
    io::CsvWriter w({"row", "iteration", "classifier_label", "classifier_confidence", "latent_norm"});
    for (std::size_t r = 0; r < traj.rows; ++r) {
        for (std::size_t t = 0; t < traj.iterations; ++t) {
            const std::size_t k = r * traj.iterations + t;
            const std::size_t lab = cls.labels[k];
            w.row(r, t, lab, static_cast<double>(cls.probabilities(k, lab)), traj.latent(r, t).norm());
        }
    }
    w.save(s.out(artifact::rotation));

    io::CsvWriter sum({"target_label", "endpoint_iteration", "rows_on_target", "rows"});
    for (std::size_t target = opts.first_label + 1; target <= opts.last_label; ++target) {
        const std::size_t it = traj.endpoint(target, opts);
        std::size_t hits = 0;
        for (std::size_t r = 0; r < traj.rows; ++r) hits += cls.labels[r * traj.iterations + it] == target;
        sum.row(target, it, hits, traj.rows);
    }
    sum.save(s.out(artifact::rotation_summary));
}

std::vector<CheckResult> verify(const RunConfig& cfg, const Log& log) {
    Stage s(cfg, log, "verify");
    const auto qb = s.load_basis();
    const std::size_t m = qb.dim();
    const double cn = qb.norm_constant();
    std::vector<CheckResult> out;
    auto check = [&](std::string name, bool ok, std::string detail) {
        out.push_back({std::move(name), ok, std::move(detail)});
    };

    const Eigen::MatrixXd gram = basis::gram_matrix(qb.vectors());
    double off = 0.0, diag = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            const double v = gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            if (a == b) diag = std::max(diag, std::abs(v - cn) / cn);
            else off = std::max(off, std::abs(v) / cn);
        }
    }
    check("orthogonality", off <= 1e-9, "max off-diagonal/C " + fmt(off));
    check("normalization", diag <= 1e-12, "max relative diagonal deviation " + fmt(diag));

    SeededRng rng = SeededRng::derive(cfg.seed, "verify");
    const auto a_op = ops::completeness_operator(qb);
    double recon = 0.0, parseval = 0.0, a_err = 0.0;
    bool scale_ok = true;
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(m));
        for (auto& v : z) v = rng.normal();
        const std::span<const double> zs(z.data(), m);
        const auto d = spectral::decompose(zs, qb);
        const auto back = spectral::reconstruct(d, qb, m);
        const Eigen::Map<const Eigen::VectorXd> bv(back.data(), static_cast<Eigen::Index>(m));
        recon = std::max(recon, (bv - z).norm() / z.norm());
        double sum = 0.0;
        for (double c : d.coefficients) sum += c * c;
        parseval = std::max(parseval, std::abs(z.squaredNorm() - cn * sum) / z.squaredNorm());
        a_err = std::max(a_err, (a_op.apply(z) - cn * z).norm() / (cn * z.norm()));

        std::vector<float> zf(z.data(), z.data() + m);
        const std::size_t base = spectral::classify_lsd(zf, qb).label;
        for (double sc : {0.1, 10.0}) {
            std::vector<float> scaled(m);
            for (std::size_t i = 0; i < m; ++i) scaled[i] = static_cast<float>(sc * z[static_cast<Eigen::Index>(i)]);
            scale_ok = scale_ok && spectral::classify_lsd(scaled, qb).label == base;
        }
    }
    check("completeness", recon <= 1e-6, "max relative reconstruction error " + fmt(recon));
    check("parseval", parseval <= 1e-6, "max relative deviation " + fmt(parseval));
    check("completeness_operator", a_err <= 1e-6, "max relative |Az - Cz| " + fmt(a_err));
    check("scale_invariance", scale_ok, "classify_lsd(s z) == classify_lsd(z) for s in {0.1, 10}");

    if (m >= 2) {
        const Eigen::VectorXd xa = qb.vector(0), xb = qb.vector(1);
        const double quarter = (ops::rotation(qb, 0, 1, 0.0, std::numbers::pi / 2).apply(xa) - xb).cwiseAbs().maxCoeff();
        check("rotation_quarter_turn", quarter <= 1e-9, "max |R(pi/2, 0) xi_a - xi_b| " + fmt(quarter));
        Eigen::VectorXd z = xa;
        for (int r = 0; r < 3; ++r) {
            z = ops::renormalize(ops::rotation(qb, 0, 1, r * std::numbers::pi / 6, std::numbers::pi / 6).apply(z),
                                 static_cast<double>(m));
        }
        const double cosd = 1.0 - z.dot(xb) / (z.norm() * xb.norm());
        check("rotation_three_steps", cosd <= 1e-6, "cosine distance to xi_b " + fmt(cosd));
        const Eigen::VectorXd v = std::cos(0.3) * xa + std::sin(0.3) * xb;
        const Eigen::VectorXd two = ops::rotation(qb, 0, 1, 0.5, 0.2).apply(ops::rotation(qb, 0, 1, 0.3, 0.2).apply(v));
        const Eigen::VectorXd one = ops::rotation(qb, 0, 1, 0.3, 0.4).apply(v);
        const double add = (two - one).norm() / one.norm();
        check("rotation_additivity", add <= 1e-9, "relative difference " + fmt(add));
    }

    if (fs::exists(s.out(artifact::means))) {
        const auto means = read_means(s.out(artifact::means));
        const auto rebuilt = basis::gram_schmidt(means, cn);
        check("rebuild_bit_identical", rebuilt == qb, "Gram-Schmidt of the stored means reproduces the basis file");
        double span_err = 0.0;
        for (std::size_t k = 0; k < means.size() && k < m; ++k) {
            const Eigen::Map<const Eigen::VectorXd> eta(means[k].values.data(), static_cast<Eigen::Index>(m));
            Eigen::VectorXd rest = eta;
            for (std::size_t j = 0; j <= k; ++j) {
                const Eigen::VectorXd xi = qb.vector(j);
                rest -= xi * (xi.dot(eta) / cn);
            }
            span_err = std::max(span_err, rest.norm() / eta.norm());
        }
        check("span_preservation", span_err <= 1e-8, "max residual of eta_k outside span(xi_0..xi_k) " + fmt(span_err));
    }

    if (fs::exists(s.out(artifact::generator))) {
        const auto g = models::load_checkpoint(s.out(artifact::generator));
        TensorF z = rng.normal_tensor<float>(64, m);
        TensorF back = TensorF::matrix(64, m);
        for (std::size_t i = 0; i < 64; ++i) {
            const auto r = spectral::reconstruct(spectral::decompose(z.row(i), qb), qb, m);
            for (std::size_t j = 0; j < m; ++j) back(i, j) = static_cast<float>(r[j]);
        }
        const TensorF a = models::generate(g, z), b = models::generate(g, back);
        double diff = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, static_cast<double>(std::abs(a[i] - b[i])));
        check("truncation_identity", diff <= 1e-5, "max |G(full-M reconstruction) - G(z)| " + fmt(diff));
    }

    if (fs::exists(s.out(artifact::cumulative))) {
        const auto t = io::read_csv(s.out(artifact::cumulative));
        bool mono = !t.rows.empty();
        for (std::size_t r = 1; r < t.rows.size(); ++r) mono = mono && t.number(r, "probability") >= t.number(r - 1, "probability");
        const double last = t.rows.empty() ? 0.0 : t.number(t.rows.size() - 1, "probability");
        check("cumulative_curve", mono && last == 1.0, "monotone, P(n = M) = " + fmt(last));
    }
    return out;
}

void run_all(const RunConfig& cfg, const Log& log) {
    train_gan(cfg, log);
    train_classifier(cfg, log);
    train_encoder(cfg, log);
    build_basis(cfg, log);
    lsd_classify(cfg, log);
    denoise(cfg, log);
    rotate(cfg, log);
}

}  // namespace lsd::pipeline
