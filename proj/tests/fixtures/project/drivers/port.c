// SPDX-License-Identifier: Apache-2.0
void poll_port(struct port *pt, int port_ready)
{
	struct queue *q = NULL;

	if (port_ready)
		q->head = pt->next;
}
