import json

import pytest

from sector_embed import pipeline
from sector_embed.cli import USAGE_EXIT, run
from sector_embed.config import PipelineConfig, config_keys, load_config
from sector_embed.errors import ConfigurationError

SMALL = {
    "synth": {"n_sectors": 3, "companies_per_sector": 6, "n_days": 60, "n_articles": 150, "seed": 2},
    "universe": {"min_mentions": 5},
    "train_returns": {"epochs": 4},
    "train_news": {"epochs": 4},
    "classify": {"k_folds": 3, "epochs": 50},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(SMALL))
    return p


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.contexts.context_size == 3 and cfg.train_returns.dim == 20
        assert cfg.train_returns.seed != cfg.train_news.seed
        assert cfg.analytics.graph_threshold == 0.6 and cfg.classify.k_folds == 4

    def test_unknown_key(self, write):
        with pytest.raises(ConfigurationError, match="contexts"):
            load_config(write("c.json", '{"contexts": {"windw": 3}}'))
        with pytest.raises(ConfigurationError):
            load_config(write("d.json", '{"extras": {}}'))

    def test_bad_json_and_types(self, write):
        with pytest.raises(ConfigurationError, match="line 1"):
            load_config(write("c.json", '{"contexts": '))
        with pytest.raises(ConfigurationError):
            load_config(None, {"contexts.context_size": "three"})
        with pytest.raises(ConfigurationError):
            load_config(None, {"train_returns.dim": 0})

    def test_overrides_and_hash(self, cfg_path):
        a = load_config(cfg_path)
        b = load_config(cfg_path, {"contexts.iqr_filter": False})
        assert a.synth.n_sectors == 3 and b.contexts.iqr_filter is False
        assert a.hash() != b.hash()
        assert a.hash() == load_config(cfg_path).hash()
        assert a.base_dir == str(cfg_path.parent)

    def test_every_key_has_a_flag(self):
        keys = {k for k, _ in config_keys()}
        assert {"paths.prices", "contexts.context_size", "classify.use_smote", "synth.seed"} <= keys
        assert len(keys) == sum(len(PipelineConfig.__dataclass_fields__[s].default_factory().__dataclass_fields__)
                                for s in ("paths", "universe", "contexts", "train_returns", "train_news",
                                          "multimodal", "analytics", "classify", "synth"))


class TestPipeline:
    def test_all_stages(self, cfg_path):
        cfg = load_config(cfg_path)
        pipeline.cmd_synth(cfg)
        res = pipeline.run_all(cfg)
        assert res["ingest"]["companies"] == 18
        assert 0.4 < res["contexts"]["iqr_retention"] < 0.6
        out = cfg.output_dir
        for f in ("embeddings/returns.tsv", "embeddings/news.tsv", "embeddings/multimodal.tsv",
                  "analytics/edges_multimodal.csv", "reports/cv_multimodal.json", "reports/summary_all.txt"):
            assert (out / f).exists(), f
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["stages"]["ingest"]["config_hash"] == cfg.hash()
        assert "classify:all" in manifest["stages"]
        summary = (out / "reports" / "summary_all.txt").read_text().splitlines()
        assert summary[0] == "3-fold cross validation"
        assert [line.split()[0] for line in summary[2:]] == ["Returns", "News", "Multimodal"]

    def test_stage_order_enforced(self, cfg_path):
        cfg = load_config(cfg_path)
        with pytest.raises(ConfigurationError, match="earlier pipeline stage"):
            pipeline.cmd_contexts(cfg)

    def test_missing_inputs(self, cfg_path):
        with pytest.raises(ConfigurationError, match="paths.prices"):
            pipeline.cmd_ingest(load_config(cfg_path))


class TestCli:
    def test_end_to_end(self, cfg_path, capsys):
        c = str(cfg_path)
        assert run(["synth", "--config", c]) == 0
        assert run(["all", "--config", c]) == 0
        capsys.readouterr()
        tickers = (cfg_path.parent / "run" / "ingest" / "universe.csv").read_text().splitlines()
        query = next(line.split(",")[0] for line in tickers if line and not line.startswith(("#", "ticker")))
        assert run(["knn", "--config", c, "--query", query, "--k", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith(f"Query: {query.title()} Holdings - ")
        assert len(lines) == 2 + 2
        knn_json = json.loads((cfg_path.parent / "run" / "analytics" / f"knn_multimodal_{query}.json").read_text())
        assert len(knn_json["neighbors"]) == 2

    def test_unknown_ticker_exit(self, cfg_path, capsys):
        c = str(cfg_path)
        run(["synth", "--config", c])
        run(["all", "--config", c])
        capsys.readouterr()
        assert run(["knn", "--config", c, "--query", "ZZZZZ"]) == 6
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "unknown-ticker"

    def test_config_error_exit(self, write, capsys):
        assert run(["ingest", "--config", str(write("c.json", '{"bogus": {}}'))]) == 4
        assert json.loads(capsys.readouterr().err)["error"] == "config"

    def test_usage_exit(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["frobnicate"])
        assert exc.value.code == USAGE_EXIT
        assert '"usage"' in capsys.readouterr().err

    def test_override_flag(self, cfg_path):
        c = str(cfg_path)
        assert run(["synth", "--config", c, "--synth.n_articles", "120"]) == 0
        lines = (cfg_path.parent / "data" / "news.jsonl").read_text().splitlines()
        assert len(lines) == 120
