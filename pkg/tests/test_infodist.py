import math
import random

import pytest

from redkit.compressor import Backend, compress_len
from redkit.errors import InputError, UndefinedDistanceError
from redkit.infodist import (
    CorpusFrequencyProvider,
    aid_approx,
    cond_len,
    distance_matrix,
    ncd,
    nid_approx,
    nwd,
)

from conftest import motif_bytes, random_bytes, structured_bytes


class TestAid:
    def test_identical_motif_strings(self):
        x = motif_bytes(2048, 64, 0)
        assert aid_approx(x, x, Backend.LZ) <= 0.15 * compress_len(x, Backend.LZ)

    def test_store_arithmetic(self):
        x, y = b"\x00" * 256, b"\xff" * 256
        assert aid_approx(x, y, Backend.STORE) == 2056.0

    def test_empty_against_data(self):
        y = random_bytes(100, 1)
        assert aid_approx(b"", y, Backend.STORE) == 8 * len(y) + 8


class TestNidNcd:
    def test_self_distance_structured(self):
        x = structured_bytes(2048, 1)
        assert nid_approx(x, x, Backend.LZ) <= 0.1
        assert ncd(x, x, Backend.LZ) <= 0.1

    def test_store_ratio(self):
        value = nid_approx(b"\x00" * 256, b"\xff" * 256, Backend.STORE)
        assert value == pytest.approx(2056 / 2064, abs=1e-12)
        assert ncd(b"\x00" * 256, b"\xff" * 256, Backend.STORE) == value

    def test_exact_symmetry(self):
        rng = random.Random(5)
        for trial in range(10):
            x = random_bytes(rng.randrange(1, 800), trial)
            y = structured_bytes(rng.randrange(1, 800), trial + 100)
            for backend in (Backend.STORE, Backend.RLE, Backend.LZ):
                assert ncd(x, y, backend) == ncd(y, x, backend)
                assert nid_approx(x, y, backend) == nid_approx(y, x, backend)

    def test_identity_direction_random_strings(self):
        x = random_bytes(2048, 7)
        y = random_bytes(2048, 8)
        assert ncd(x, y, Backend.LZ) > ncd(x, x, Backend.LZ) + 0.3

    def test_non_negative(self):
        x = structured_bytes(512, 2)
        assert ncd(x, x, Backend.LZ) >= 0.0
        assert aid_approx(x, x, Backend.LZ) >= 0.0


class TestCondLen:
    def test_self_conditioning_cheap(self):
        x = structured_bytes(2048, 3)
        assert cond_len(x, x, Backend.LZ) <= 0.15 * compress_len(x, Backend.LZ)

    def test_store_given_empty(self):
        x = random_bytes(77, 4)
        assert cond_len(x, b"", Backend.STORE) == 8 * 77 + 8

    def test_store_empty_given_data(self):
        y = random_bytes(200, 5)
        assert cond_len(b"", y, Backend.STORE) == 8.0

    def test_conditioning_never_hurts_beyond_framing(self):
        # corpus-wide: cond_len(x|y) <= C(x) + 8 bits
        corpus = [
            structured_bytes(1200, 0),
            structured_bytes(900, 1),
            random_bytes(1000, 2),
            random_bytes(700, 3),
            motif_bytes(900, 32, 4),
            motif_bytes(800, 5, 5),
            b"\x07" * 530,
            b"\x07" * 570,
            b"",
        ]
        for x in corpus:
            cx = compress_len(x, Backend.LZ)
            for y in corpus:
                assert cond_len(x, y, Backend.LZ) <= cx + 8.0


class TestNwd:
    def test_fried_chicken(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        assert nwd("fried", "chicken", provider) == pytest.approx(1 / 3, abs=1e-9)

    def test_identity_is_zero(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        assert nwd("chicken", "chicken", provider) == 0.0

    def test_symmetry(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        assert nwd("fried", "chicken", provider) == nwd("chicken", "fried", provider)

    def test_triangle_inequality_violation(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        ab = nwd("alpha", "bravo", provider)
        bc = nwd("bravo", "charlie", provider)
        ac = nwd("alpha", "charlie", provider)
        assert ab + bc < ac

    def test_unknown_term(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        with pytest.raises(UndefinedDistanceError):
            nwd("fried", "zeppelin", provider)

    def test_zero_cocount(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        with pytest.raises(UndefinedDistanceError):
            nwd("fried", "feather", provider)

    def test_counts(self, toy_corpus_text):
        provider = CorpusFrequencyProvider(toy_corpus_text)
        assert provider.total_docs == 64
        assert provider.count("fried") == 8
        assert provider.count("chicken") == 8
        assert provider.cocount("fried", "chicken") == 4
        assert provider.cocount("chicken", "chicken") == provider.count("chicken")

    def test_empty_corpus(self):
        with pytest.raises(InputError):
            CorpusFrequencyProvider("\n\n")


class TestDistanceMatrix:
    def test_single_item(self):
        x = structured_bytes(600, 0)
        m = distance_matrix([x], Backend.LZ)
        assert len(m.items) == 1
        assert m.values[0][0] == ncd(x, x, Backend.LZ)

    def test_duplicate_items(self):
        x = structured_bytes(600, 1)
        m = distance_matrix([x, x], Backend.LZ)
        assert m.values[0][1] == m.values[0][0]
        assert m.values[1][0] == m.values[0][1]

    def test_parallel_identical_to_serial(self):
        items = [structured_bytes(400 + 60 * i, i) for i in range(6)] + [
            random_bytes(500, 50 + i) for i in range(4)
        ]
        serial = distance_matrix(items, Backend.LZ, "ncd")
        parallel = distance_matrix(items, Backend.LZ, "ncd", max_workers=4)
        assert serial.values == parallel.values
        assert serial.to_csv() == parallel.to_csv()

    def test_symmetric(self):
        items = [random_bytes(300, i) for i in range(5)]
        m = distance_matrix(items, Backend.LZ)
        for i in range(5):
            for j in range(5):
                assert m.values[i][j] == m.values[j][i]

    def test_csv_format(self):
        m = distance_matrix([b"aaa", b"bbb"], Backend.STORE, ids=["one", "two"])
        lines = m.to_csv().splitlines()
        assert lines[0] == "one,two"
        assert all(len(cell.split(".")[1]) == 6 for cell in lines[1].split(","))

    def test_nid_metric_matches_ncd(self):
        items = [structured_bytes(300, i) for i in range(3)]
        assert distance_matrix(items, Backend.LZ, "ncd").values == distance_matrix(
            items, Backend.LZ, "nid"
        ).values

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            distance_matrix([], Backend.LZ)
        with pytest.raises(InputError):
            distance_matrix([b"x"], Backend.LZ, metric="euclid")
