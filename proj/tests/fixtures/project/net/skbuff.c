// SPDX-License-Identifier: Apache-2.0
static inline bool skb_unref(struct sk_buff *skb)
{
	if (unlikely(!skb))
		return false;
	if (likely(refcount_read(&skb->users) == 1))
		smp_rmb();
	else if (likely(!refcount_dec_and_test(&skb->users)))
		return false;

	return true;
}

void __kfree_skb(struct sk_buff *skb)
{
	skb_release_all(skb);
	kfree_skbmem(skb->head);
}

void consume_skb(struct sk_buff *skb)
{
	if (!skb_unref(skb))
		return;

	trace_consume_skb(skb);
	__kfree_skb(skb);
}

int drop_packet(struct net_device *dev)
{
	struct sk_buff *skb = NULL;

	if (dev->flags & IFF_UP)
		dev->stats.tx_dropped++;
	consume_skb(skb);
	return 0;
}
