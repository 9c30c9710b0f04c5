import pytest

from ultraholo import flatkernel as fk
from ultraholo import weightseq as ws
from ultraholo.indices import IndexEstimate
from ultraholo.weightfn import FromSequence, Power


def pinned_index(value):
    """An index estimate fixed by hand, so model parameters have closed forms."""
    return IndexEstimate(value, "pinned", None, 0.0)


@pytest.fixture(scope="session")
def gevrey2():
    return ws.gevrey(2.0, 200)


@pytest.fixture(scope="session")
def pathological():
    return ws.pathological_sequence()


@pytest.fixture(scope="session")
def power_model():
    # gamma(tau) = 2 pinned: delta = 3/2, s = 7/12, beta = 6/7
    return fk.build_model(Power(0.5), 1.0, 1.0, gamma_tau=pinned_index(2.0))


@pytest.fixture(scope="session")
def gevrey1_weight():
    return FromSequence(ws.gevrey(1.0, 200))
