"""Training loop, batched inference and evaluation."""
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .checkpoint import round_to_f32, save_checkpoint
from .metrics import evaluate_scores
from .numerics.optim import Adam

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    step: int
    loss: float
    l_sim: float
    l_spe: float
    l_clf: float

    def to_dict(self):
        return {"step": self.step, "loss": self.loss, "l_sim": self.l_sim,
                "l_spe": self.l_spe, "l_clf": self.l_clf}


@dataclass
class TrainHistory:
    steps: list = field(default_factory=list)
    evals: list = field(default_factory=list)
    best_step: int = None
    best_acc: float = None

    @property
    def losses(self):
        return [s.loss for s in self.steps]


def _mean(t):
    return float(np.mean(t.data)) if t is not None else 0.0


def train_step(batch, model, opt, step=0):
    """Forward, backward and one Adam update; returns the batch loss terms."""
    model.zero_grad()
    res = model.forward(batch, training=True)
    res.loss.backward()
    opt.step()
    return StepResult(step, float(res.loss.data), _mean(res.l_sim), _mean(res.l_spe),
                      _mean(res.l_clf))


def predict_proba(model, featurizer, samples, chunk=256):
    out = []
    with nx.no_grad():
        for start in range(0, len(samples), chunk):
            batch = featurizer.collate(samples[start:start + chunk])
            out.append(model.forward(batch, training=False, with_loss=False).probs.data)
    return np.concatenate(out) if out else np.zeros((0, 2))


def evaluate(model, featurizer, samples, y):
    return evaluate_scores(y, predict_proba(model, featurizer, samples)[:, 1])


class BatchStream:
    """Endless seeded stream of shuffled index batches."""

    def __init__(self, n, batch_size, seed):
        self.n, self.batch_size = n, batch_size
        self.rng = np.random.default_rng([seed, 2])
        self._queue = []

    def next(self):
        while len(self._queue) < self.batch_size:
            self._queue.extend(self.rng.permutation(self.n).tolist())
        out, self._queue = self._queue[:self.batch_size], self._queue[self.batch_size:]
        return out


def fit(model, featurizer, samples, y, val_samples=None, y_val=None, max_steps=None,
        log=None, checkpoint_path=None, opt=None):
    """Train ``model`` on ``samples``.

    Every ``eval_every`` steps (and at the end) the model is scored on the
    validation set and the best parameters by validation accuracy are kept.
    Kept parameters are rounded to float32, the checkpoint precision, and
    restored into the model when training ends.
    """
    cfg = model.config
    max_steps = cfg.max_steps if max_steps is None else max_steps
    opt = opt or Adam(model.trainable(), lr=cfg.lr)
    stream = BatchStream(len(samples), cfg.batch_size, cfg.seed)
    history = TrainHistory()
    y = np.asarray(y)
    best_state = None

    def checkpoint(step):
        nonlocal best_state
        state = round_to_f32(model.state_dict())
        acc = None
        if val_samples:
            acc = evaluate(model, featurizer, val_samples, y_val).acc
            history.evals.append({"step": step, "val_acc": acc})
            logger.info("step %d val_acc %.4f", step, acc)
        if best_state is None or acc is None or acc > history.best_acc:
            best_state, history.best_step, history.best_acc = state, step, acc
        if checkpoint_path:
            save_checkpoint(checkpoint_path, cfg, best_state, opt.state, history.best_step)

    for step in range(1, max_steps + 1):
        idx = stream.next()
        batch = featurizer.collate([samples[i] for i in idx], y[idx])
        res = train_step(batch, model, opt, step)
        history.steps.append(res)
        if log is not None:
            log.write(json.dumps(res.to_dict()) + "\n")
        if cfg.eval_every and step % cfg.eval_every == 0 and step != max_steps:
            checkpoint(step)
    checkpoint(max_steps)
    model.load_state_dict(best_state)
    return history
