"""Input validation for the estimator API."""
import numpy as np

from .corpus import PatentRecord
from .featurize import Sample


def check_samples(X):
    """Coerce ``X`` to a list of :class:`Sample`.

    Accepts samples, ``(target, refs)`` pairs, or bare records (no refs).
    """
    if isinstance(X, (Sample, PatentRecord)):
        raise TypeError("expected a sequence of samples, got a single item")
    out = []
    for i, item in enumerate(X):
        if isinstance(item, Sample):
            s = item
        elif isinstance(item, PatentRecord):
            s = Sample(item, ())
        elif isinstance(item, (tuple, list)) and len(item) == 2:
            s = Sample(item[0], tuple(item[1]))
        else:
            raise TypeError(f"sample {i}: expected Sample, (target, refs) or PatentRecord")
        if not isinstance(s.target, PatentRecord):
            raise TypeError(f"sample {i}: target must be a PatentRecord")
        for ref in s.refs:
            if not isinstance(ref, PatentRecord):
                raise TypeError(f"sample {i}: references must be PatentRecords")
            if ref.filing_date >= s.target.filing_date:
                raise ValueError(f"sample {i}: reference {ref.id} is not earlier than the target")
        out.append(s)
    if not out:
        raise ValueError("no samples given")
    return out


def check_labels(y, samples):
    """Labels as an int array; taken from the target records when ``y`` is None."""
    if y is None:
        y = [s.target.label for s in samples]
        if any(v is None for v in y):
            raise ValueError("y not given and some targets carry no label")
    y = np.asarray(y)
    if y.shape != (len(samples),):
        raise ValueError(f"y has shape {y.shape}, expected ({len(samples)},)")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(int)
