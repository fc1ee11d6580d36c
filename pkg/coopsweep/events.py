# -*- encoding: utf-8 -*-
""" Signals the agents and the benchmark harness emit, so telemetry can be
collected without the agents knowing who listens """
import logging

LOGGER = logging.getLogger(__name__)


class Signal(object):
    """ List of receivers notified with keyword payloads """

    def __init__(self):
        self.event_receivers = []

    @property
    def has_receivers(self):
        """ Senders check it before building a payload """
        return bool(self.event_receivers)

    def add_receiver(self, receiver):
        """ Add a receiver to the list of receivers.

        :param receiver: a callable variable
        """
        if not callable(receiver):
            raise TypeError("receiver must be callable")
        self.event_receivers.append(receiver)

    def send_robust(self, **kwargs):
        """ Trigger all receivers with the given parameters.
        Exceptions are caught and logged, the remaining receivers still run.

        :param kwargs: all arguments from the event.
        """
        for receiver in self.event_receivers:
            try:
                receiver(**kwargs)
            except Exception:  # pylint: disable=W0703
                LOGGER.exception(
                    'Exception while sending to "%s".',
                    getattr(receiver, '__name__', repr(receiver))
                )


# per environment step: step, reward_sum, epsilon, queue_length,
# batch_updates, max_value, algorithm
STEP_TELEMETRY = Signal()
# per (algorithm, run): algorithm, run, seed, total_reward, batch_updates,
# elapsed_time, updates_per_second
RUN_FINISHED = Signal()
