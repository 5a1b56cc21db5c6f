import numpy as np
import pytest
from hypothesis import given, strategies as st

from metamcq.dataset import Corpus, MCQItem, OptionLabel, LABELS
from metamcq.evaluate import (
    EvalError,
    Prediction,
    accuracy,
    rule_baseline,
    scorer_argmax,
    write_submission,
)
from metamcq.scores import ConfidenceVector, QuestionEmbedding, ScoreBundle


def make_item(item_id, gold, question="某句像什么", options=("甲", "乙", "丙", "丁")):
    return MCQItem(
        id=item_id,
        question=question,
        options=options,
        gold=OptionLabel(gold) if gold else None,
    )


def ten_item_fixture():
    """7 correct, 2 wrong, 1 unextracted among labeled items, plus 2 unlabeled."""
    items = [make_item(f"e{i:02d}", "ABCD"[i % 4]) for i in range(10)]
    items += [make_item("u01", None), make_item("u02", None)]
    corpus = Corpus(items=items)
    predictions = []
    for i in range(10):
        gold = OptionLabel("ABCD"[i % 4])
        if i < 7:
            predicted = gold
        elif i < 9:
            predicted = LABELS[(gold.index + 1) % 4]
        else:
            predicted = None
        predictions.append(Prediction(item_id=f"e{i:02d}", predicted=predicted))
    predictions.append(Prediction(item_id="u01", predicted=OptionLabel.A))
    return corpus, predictions


class TestAccuracy:
    def test_hand_counted_fixture(self):
        corpus, predictions = ten_item_fixture()
        report = accuracy(predictions, corpus)
        assert report.counts == {
            "correct": 7,
            "wrong": 2,
            "unextracted": 1,
            "skipped_no_gold": 2,
        }
        assert report.accuracy == pytest.approx(0.7)
        assert sum(report.counts.values()) == len(corpus)

    def test_all_correct(self):
        corpus = Corpus(items=[make_item(f"a{i}", "A") for i in range(5)])
        preds = [Prediction(item_id=f"a{i}", predicted=OptionLabel.A) for i in range(5)]
        assert accuracy(preds, corpus).accuracy == 1.0

    def test_per_item_table_recomputes_aggregate(self):
        corpus, predictions = ten_item_fixture()
        report = accuracy(predictions, corpus)
        correct = sum(1 for row in report.per_item if row["outcome"] == "correct")
        scored = sum(
            1 for row in report.per_item if row["outcome"] != "skipped_no_gold"
        )
        assert report.accuracy == correct / scored

    def test_unknown_id_rejected(self):
        corpus = Corpus(items=[make_item("a1", "A")])
        with pytest.raises(EvalError, match="unknown"):
            accuracy([Prediction(item_id="ghost", predicted=OptionLabel.A)], corpus)

    def test_missing_prediction_counts_unextracted(self):
        corpus = Corpus(items=[make_item("a1", "A"), make_item("a2", "B")])
        report = accuracy([Prediction(item_id="a1", predicted=OptionLabel.A)], corpus)
        assert report.counts["unextracted"] == 1
        assert report.accuracy == 0.5


class TestScorerArgmax:
    def bundle_for(self, corpus, vectors):
        return ScoreBundle(
            confidences={i: ConfidenceVector(scores=v) for i, v in vectors.items()},
            embeddings={
                i: QuestionEmbedding(item_id=i, vector=(0.0,)) for i in vectors
            },
            dimension=1,
        )

    def test_argmax(self):
        corpus = Corpus(items=[make_item("a1", "B")])
        bundle = self.bundle_for(corpus, {"a1": (0.1, 0.6, 0.2, 0.1)})
        preds = scorer_argmax(bundle, corpus)
        assert preds[0].predicted == OptionLabel.B
        assert preds[0].source == "scorer_argmax"

    def test_uniform_ties_to_a(self):
        corpus = Corpus(items=[make_item("a1", "B")])
        bundle = self.bundle_for(corpus, {"a1": (0.25, 0.25, 0.25, 0.25)})
        assert scorer_argmax(bundle, corpus)[0].predicted == OptionLabel.A

    def test_matches_linear_scan_oracle(self, corpus, bundle):
        preds = {p.item_id: p.predicted for p in scorer_argmax(bundle, corpus)}
        for item in corpus:
            scores = bundle.confidence(item.id).scores
            best, best_score = 0, scores[0]
            for i in range(1, 4):
                if scores[i] > best_score:
                    best, best_score = i, scores[i]
            assert preds[item.id] == LABELS[best]

    def test_missing_score_rejected(self):
        corpus = Corpus(items=[make_item("a1", "A"), make_item("a2", "B")])
        bundle = self.bundle_for(corpus, {"a1": (0.25, 0.25, 0.25, 0.25)})
        with pytest.raises(Exception, match="missing"):
            scorer_argmax(bundle, corpus)

    @given(
        st.lists(
            st.floats(min_value=0.01, max_value=10.0), min_size=4, max_size=4
        ).filter(lambda v: len({round(x, 6) for x in v}) == 4)
    )
    def test_invariant_under_monotone_transform(self, raw):
        total = sum(raw)
        base = tuple(x / total for x in raw)
        transformed_raw = [np.sqrt(x) for x in base]
        t_total = sum(transformed_raw)
        transformed = tuple(x / t_total for x in transformed_raw)
        a = ConfidenceVector(scores=base).argmax()
        b = ConfidenceVector(scores=transformed).argmax()
        assert a == b


RULE_FIXTURE = [
    # (sentence, options, expected prediction or None)
    ("闪电像火蛇", ("银盘", "流水", "火蛇", "棉花糖"), "C"),
    ("月亮如银盘", ("银盘", "火蛇", "阶梯", "灯塔"), "A"),
    ("时间似流水", ("灯塔", "流水", "珍珠", "鹅毛"), "B"),
    ("雪花如鹅毛飘落", ("珍珠", "美酒", "潮水", "鹅毛"), "D"),
    ("老师是灯塔", ("灯塔", "大海", "朝阳", "星星"), "A"),
    ("露珠似珍珠", ("潮水", "珍珠", "火蛇", "银盘"), "B"),
    ("书籍是阶梯", ("美酒", "灯塔", "阶梯", "流水"), "C"),
    ("他的话如利剑", ("鹅毛", "珍珠", "银盘", "利剑"), "D"),
    ("友谊像美酒", ("美酒", "潮水", "大海", "朝阳"), "A"),
    ("记忆如潮水", ("星星", "潮水", "利剑", "灯塔"), "B"),
    ("青春似朝阳", ("大海", "火蛇", "朝阳", "阶梯"), "C"),
    ("心像大海一样宽广", ("流水", "银盘", "鹅毛", "大海"), "D"),
    # Harder rows: component absent or paraphrased; the heuristic may miss.
    ("飞流直下三千尺", ("瀑布", "大海", "月亮", "白云"), None),
    ("千树万树梨花开", ("雪", "春风", "梨花", "露珠"), "C"),
    ("夜色温柔", ("月亮", "星星", "夜风", "温柔的夜色"), "D"),
    ("他跑得很快", ("闪电", "豹子", "风", "箭"), None),
    ("岁月如歌", ("歌声悠扬", "岁月漫长", "时间", "音乐"), "B"),
    ("人生是一场旅行", ("一场旅行", "一本书", "一出戏", "一条河"), "A"),
    ("她笑起来像春天", ("春天般灿烂", "冬天", "夏日", "秋风"), "A"),
    ("大海如镜", ("镜子", "平静如镜", "波涛", "蓝天"), "B"),
]


class TestRuleBaseline:
    def test_vehicle_after_comparator(self):
        item = make_item(
            "r1", "C", question="闪电像火蛇", options=("银盘", "流水", "火蛇", "棉花糖")
        )
        assert rule_baseline(item) == OptionLabel.C

    def test_no_comparator_no_overlap_abstains(self):
        item = make_item("r2", "A", question="天气不错", options=("甲甲", "乙乙", "丙丙", "丁丁"))
        assert rule_baseline(item) is None

    def test_twenty_item_fixture_accuracy(self):
        items = []
        predictions = []
        for i, (sentence, options, expected) in enumerate(RULE_FIXTURE):
            gold = expected if expected else "A"
            item = make_item(f"r{i:02d}", gold, question=sentence, options=options)
            items.append(item)
            predictions.append(
                Prediction(
                    item_id=item.id, predicted=rule_baseline(item), source="rule_baseline"
                )
            )
        report = accuracy(predictions, Corpus(items=items))
        assert report.accuracy >= 0.6


def test_write_submission(tmp_path):
    corpus = Corpus(items=[make_item("a1", "A"), make_item("a2", "B"), make_item("a3", None)])
    preds = [
        Prediction(item_id="a1", predicted=OptionLabel.C),
        Prediction(item_id="a2", predicted=None),
        Prediction(item_id="a3", predicted=OptionLabel.D),
    ]
    out = tmp_path / "submission.txt"
    write_submission(preds, corpus, out)
    assert out.read_text(encoding="utf-8") == "C\n\nD\n"
