import pytest

from sap_rts import config as C


def test_defaults():
    cfg = C.load(None)
    assert cfg.library.size == 50 and cfg.library.seen == 30 and cfg.tournament.episodes == 5
    assert cfg.sen.test_fraction == 0.2 and cfg.experiment.k == 200
    assert len(cfg.digest()) == 16 and cfg.digest() == C.load(None).digest()


def test_yaml_roundtrip(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 4\nmap: basesWorkers16x16\nlibrary: {size: 10, seen: 6}\n"
                 "sen: {hidden: [32, 16], epochs: 50}\nrecognition: {economy_cuts: [0.4, 0.7]}\n"
                 "stats: {worker: {hp_max: 2}}\n")
    cfg = C.load(p)
    assert cfg.seed == 4 and cfg.sen.hidden == (32, 16) and cfg.recognition.economy_cuts == (0.4, 0.7)
    assert cfg.stats == {"worker": {"hp_max": 2}}
    assert C.from_dict(cfg.to_dict()).digest() == cfg.digest()
    assert cfg.digest() != C.load(None).digest()


@pytest.mark.parametrize("text", [
    "bogus: 1", "library: {size: 10, seen: 10}", "map: moon", "sen: {batch_size: 0}",
    "tournament: {episodes: 0}", "sen: {dropout: 0.5}", "library: 5", "- a\n- b", "seed: [unclosed",
])
def test_invalid_configs(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(C.ConfigError):
        C.load(p)
